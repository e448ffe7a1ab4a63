#include "ssn/sparse.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ssn {

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
                           std::vector<Index> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      offsets_(std::move(row_offsets)),
      cols_idx_(std::move(col_indices)),
      values_(std::move(values)) {
  require(rows_ >= 0 && cols_ >= 0, "SparseMatrix: negative dimension");
  require(static_cast<Index>(offsets_.size()) == rows_ + 1,
          "SparseMatrix: row offsets must have rows+1 entries");
  require(cols_idx_.size() == values_.size(),
          "SparseMatrix: column index and value arrays differ in length");
  require(offsets_.front() == 0 && offsets_.back() == static_cast<Index>(values_.size()),
          "SparseMatrix: last row offset must equal the number of stored values");
  for (Index i = 0; i < rows_; ++i) {
    require(offsets_[i] <= offsets_[i + 1], "SparseMatrix: row offsets decrease");
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      const Index j = cols_idx_[k];
      require(j >= 0 && j < cols_, "SparseMatrix: column index out of range");
      require(k == offsets_[i] || cols_idx_[k - 1] < j,
              "SparseMatrix: column indices not strictly increasing");
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols,
                                         std::span<const Triplet> entries) {
  std::vector<Index> counts(rows + 1, 0);
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      std::ostringstream msg;
      msg << "SparseMatrix: triplet (" << t.row << "," << t.col << ") outside " << rows
          << "x" << cols;
      throw ContractViolation(msg.str());
    }
    ++counts[t.row + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());

  std::vector<Index> cols_raw(entries.size());
  std::vector<double> vals_raw(entries.size());
  std::vector<Index> fill(counts.begin(), counts.end() - 1);
  for (const auto& t : entries) {
    const Index k = fill[t.row]++;
    cols_raw[k] = t.col;
    vals_raw[k] = t.value;
  }

  std::vector<Index> offsets(rows + 1, 0);
  std::vector<Index> out_cols;
  std::vector<double> out_vals;
  out_cols.reserve(entries.size());
  out_vals.reserve(entries.size());
  std::vector<Index> perm;
  for (Index i = 0; i < rows; ++i) {
    perm.resize(counts[i + 1] - counts[i]);
    std::iota(perm.begin(), perm.end(), counts[i]);
    std::sort(perm.begin(), perm.end(),
              [&](Index x, Index y) { return cols_raw[x] < cols_raw[y]; });
    for (Index k : perm) {
      if (static_cast<Index>(out_cols.size()) > offsets[i] && out_cols.back() == cols_raw[k]) {
        out_vals.back() += vals_raw[k];
      } else {
        out_cols.push_back(cols_raw[k]);
        out_vals.push_back(vals_raw[k]);
      }
    }
    offsets[i + 1] = static_cast<Index>(out_cols.size());
  }
  return SparseMatrix(rows, cols, std::move(offsets), std::move(out_cols), std::move(out_vals));
}

SparseMatrix SparseMatrix::identity(Index n) { return diagonal(Vector::Ones(n)); }

SparseMatrix SparseMatrix::diagonal(const Vector& d) {
  const Index n = d.size();
  std::vector<Index> offsets(n + 1);
  std::iota(offsets.begin(), offsets.end(), Index{0});
  std::vector<Index> cols(n);
  std::iota(cols.begin(), cols.end(), Index{0});
  std::vector<double> vals(d.data(), d.data() + n);
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& a, double drop_tol) {
  std::vector<Index> offsets{0};
  std::vector<Index> cols;
  std::vector<double> vals;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (std::abs(a(i, j)) > drop_tol) {
        cols.push_back(j);
        vals.push_back(a(i, j));
      }
    }
    offsets.push_back(static_cast<Index>(cols.size()));
  }
  return SparseMatrix(a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::from_eigen(const Eigen::SparseMatrix<double>& a) {
  Eigen::SparseMatrix<double, Eigen::RowMajor, Index> r = a;
  r.makeCompressed();
  std::vector<Index> offsets(r.outerIndexPtr(), r.outerIndexPtr() + r.rows() + 1);
  std::vector<Index> cols(r.innerIndexPtr(), r.innerIndexPtr() + r.nonZeros());
  std::vector<double> vals(r.valuePtr(), r.valuePtr() + r.nonZeros());
  return SparseMatrix(r.rows(), r.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

double SparseMatrix::coeff(Index i, Index j) const {
  require(i >= 0 && i < rows_ && j >= 0 && j < cols_, "SparseMatrix::coeff: out of range");
  const auto first = cols_idx_.begin() + offsets_[i];
  const auto last = cols_idx_.begin() + offsets_[i + 1];
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[it - cols_idx_.begin()];
}

bool SparseMatrix::is_diagonal() const {
  if (rows_ != cols_) return false;
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      if (cols_idx_[k] != i && values_[k] != 0.0) return false;
    }
  }
  return true;
}

Vector SparseMatrix::diagonal_values() const {
  const Index n = std::min(rows_, cols_);
  Vector d(n);
  for (Index i = 0; i < n; ++i) d[i] = coeff(i, i);
  return d;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix a = DenseMatrix::Zero(rows_, cols_);
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) a(i, cols_idx_[k]) += values_[k];
  }
  return a;
}

Eigen::SparseMatrix<double> SparseMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(values_.size());
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      trips.emplace_back(static_cast<int>(i), static_cast<int>(cols_idx_[k]), values_[k]);
    }
  }
  Eigen::SparseMatrix<double> out(rows_, cols_);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

Vector matvec(const SparseMatrix& a, const Vector& x) {
  if (x.size() != a.cols()) {
    throw ContractViolation("matvec: vector length " + std::to_string(x.size()) +
                            " does not match matrix columns " + std::to_string(a.cols()));
  }
  const auto off = a.row_offsets();
  const auto col = a.col_indices();
  const auto val = a.values();
  Vector y(a.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Index k = off[i]; k < off[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
  return y;
}

Vector matvec_transpose(const SparseMatrix& a, const Vector& x) {
  if (x.size() != a.rows()) {
    throw ContractViolation("matvec_transpose: vector length " + std::to_string(x.size()) +
                            " does not match matrix rows " + std::to_string(a.rows()));
  }
  const auto off = a.row_offsets();
  const auto col = a.col_indices();
  const auto val = a.values();
  Vector y = Vector::Zero(a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    for (Index k = off[i]; k < off[i + 1]; ++k) y[col[k]] += val[k] * xi;
  }
  return y;
}

namespace {

std::vector<Triplet> triplets_of(const SparseMatrix& a, double s = 1.0) {
  std::vector<Triplet> out;
  out.reserve(a.nnz());
  const auto off = a.row_offsets();
  const auto col = a.col_indices();
  const auto val = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = off[i]; k < off[i + 1]; ++k) out.push_back({i, col[k], s * val[k]});
  }
  return out;
}

}  // namespace

SparseMatrix transpose(const SparseMatrix& a) {
  auto t = triplets_of(a);
  for (auto& e : t) std::swap(e.row, e.col);
  return SparseMatrix::from_triplets(a.cols(), a.rows(), t);
}

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double s, double t) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: dimension mismatch");
  auto ta = triplets_of(a, s);
  auto tb = triplets_of(b, t);
  ta.insert(ta.end(), tb.begin(), tb.end());
  return SparseMatrix::from_triplets(a.rows(), a.cols(), ta);
}

SparseMatrix scale(const SparseMatrix& a, double s) {
  std::vector<double> vals(a.values().begin(), a.values().end());
  for (auto& v : vals) v *= s;
  return SparseMatrix(a.rows(), a.cols(), {a.row_offsets().begin(), a.row_offsets().end()},
                      {a.col_indices().begin(), a.col_indices().end()}, std::move(vals));
}

SparseMatrix scale_columns(const SparseMatrix& a, const Vector& d) {
  require(d.size() == a.cols(), "scale_columns: dimension mismatch");
  std::vector<double> vals(a.values().begin(), a.values().end());
  const auto col = a.col_indices();
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] *= d[col[k]];
  return SparseMatrix(a.rows(), a.cols(), {a.row_offsets().begin(), a.row_offsets().end()},
                      {col.begin(), col.end()}, std::move(vals));
}

SparseMatrix scale_rows(const Vector& d, const SparseMatrix& a) {
  require(d.size() == a.rows(), "scale_rows: dimension mismatch");
  std::vector<double> vals(a.values().begin(), a.values().end());
  const auto off = a.row_offsets();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = off[i]; k < off[i + 1]; ++k) vals[k] *= d[i];
  }
  return SparseMatrix(a.rows(), a.cols(), {off.begin(), off.end()},
                      {a.col_indices().begin(), a.col_indices().end()}, std::move(vals));
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  require(a.cols() == b.rows(), "multiply: inner dimensions differ");
  Eigen::SparseMatrix<double> p = a.to_eigen() * b.to_eigen();
  return SparseMatrix::from_eigen(p);
}

double frobenius_norm(const SparseMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double asymmetry(const SparseMatrix& a) {
  require(a.rows() == a.cols(), "asymmetry: matrix not square");
  const SparseMatrix d = add(a, transpose(a), 1.0, -1.0);
  double m = 0.0;
  for (double v : d.values()) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------

struct Factorization::Impl {
  using Lu = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
  using Chol = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                                    Eigen::AMDOrdering<int>>;
  // transpose() on SparseLU is non-const but only hands out a read-only view.
  mutable Lu lu;
  Chol chol;
};

Factorization factorize(const SparseMatrix& a, FactorKind kind) {
  require(a.rows() == a.cols(), "factorize: matrix must be square");
  Factorization f;
  f.n_ = a.rows();
  f.kind_ = kind;
  f.impl_ = std::make_shared<Factorization::Impl>();
  const Eigen::SparseMatrix<double> e = a.to_eigen();

  if (kind == FactorKind::spd) {
    const double scale_ref = std::max(frobenius_norm(a), 1e-300);
    if (asymmetry(a) > 1e-12 * scale_ref) {
      throw ContractViolation("factorize(spd): matrix is not symmetric");
    }
    f.impl_->chol.compute(e);
    if (f.impl_->chol.info() != Eigen::Success) {
      throw NotPositiveDefinite("factorize(spd): Cholesky breakdown, matrix is not positive definite");
    }
    return f;
  }

  if (a.nnz() == 0 && a.rows() > 0) {
    throw SingularMatrix("factorize(lu): matrix has no stored entries");
  }
  f.impl_->lu.analyzePattern(e);
  f.impl_->lu.factorize(e);
  if (f.impl_->lu.info() != Eigen::Success) {
    throw SingularMatrix("factorize(lu): " + f.impl_->lu.lastErrorMessage());
  }
  // Exact zero pivots are caught above; also reject a numerically zero U diagonal.
  if (a.rows() > 0 && !std::isfinite(f.impl_->lu.logAbsDeterminant())) {
    throw SingularMatrix("factorize(lu): zero pivot");
  }
  return f;
}

Vector Factorization::solve(const Vector& b) const {
  require(impl_ != nullptr, "Factorization::solve: empty factorization");
  require(b.size() == n_, "Factorization::solve: dimension mismatch");
  if (n_ == 0) return Vector(0);
  if (kind_ == FactorKind::spd) return impl_->chol.solve(b);
  return impl_->lu.solve(b);
}

Vector Factorization::solve_transpose(const Vector& b) const {
  require(impl_ != nullptr, "Factorization::solve_transpose: empty factorization");
  require(b.size() == n_, "Factorization::solve_transpose: dimension mismatch");
  if (n_ == 0) return Vector(0);
  if (kind_ == FactorKind::spd) return impl_->chol.solve(b);
  return impl_->lu.transpose().solve(b);
}

}  // namespace ssn

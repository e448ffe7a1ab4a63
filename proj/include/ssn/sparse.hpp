#pragma once

// Compressed-row sparse matrices, vector kernels and sparse direct
// factorizations used by the preconditioner inner solves.

#include "ssn/common.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <span>
#include <vector>

namespace ssn {

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

/// Compressed sparse row matrix.
///
/// Invariants: row offsets are nondecreasing and end at nnz(); column indices
/// are strictly increasing inside each row and lie in [0, cols()). Instances
/// are immutable once built.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Takes ownership of raw CSR arrays. Throws ContractViolation if the
  /// structure breaks any invariant.
  SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
               std::vector<Index> col_indices, std::vector<double> values);

  /// Builds from unordered triplets; duplicate entries are summed.
  static SparseMatrix from_triplets(Index rows, Index cols,
                                    std::span<const Triplet> entries);
  static SparseMatrix identity(Index n);
  static SparseMatrix diagonal(const Vector& d);
  static SparseMatrix from_dense(const DenseMatrix& a, double drop_tol = 0.0);
  static SparseMatrix from_eigen(const Eigen::SparseMatrix<double>& a);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  std::span<const Index> row_offsets() const { return offsets_; }
  std::span<const Index> col_indices() const { return cols_idx_; }
  std::span<const double> values() const { return values_; }

  /// Entry (i, j); zero when not stored.
  double coeff(Index i, Index j) const;

  bool is_diagonal() const;
  Vector diagonal_values() const;

  DenseMatrix to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> offsets_{0};
  std::vector<Index> cols_idx_;
  std::vector<double> values_;
};

/// y = A x, accumulated row by row.
Vector matvec(const SparseMatrix& a, const Vector& x);
/// y = A^T x without forming A^T.
Vector matvec_transpose(const SparseMatrix& a, const Vector& x);

SparseMatrix transpose(const SparseMatrix& a);
/// s*A + t*B.
SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double s = 1.0,
                 double t = 1.0);
SparseMatrix scale(const SparseMatrix& a, double s);
/// A * diag(d).
SparseMatrix scale_columns(const SparseMatrix& a, const Vector& d);
/// diag(d) * A.
SparseMatrix scale_rows(const Vector& d, const SparseMatrix& a);
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

double frobenius_norm(const SparseMatrix& a);
/// max |A - A^T| over all entries.
double asymmetry(const SparseMatrix& a);

enum class FactorKind { lu, spd };

/// Solver interface for the inner systems of the preconditioner. A direct
/// factorization is the default backend; an approximate solver (e.g. an AMG
/// cycle) can implement the same surface.
class InnerSolver {
 public:
  virtual ~InnerSolver() = default;
  virtual Index size() const = 0;
  virtual Vector solve(const Vector& b) const = 0;
  virtual Vector solve_transpose(const Vector& b) const = 0;
};

/// Sparse LU (column approximate minimum degree ordering, partial pivoting)
/// or sparse Cholesky with fill-reducing ordering. Copies share the
/// underlying factors.
class Factorization final : public InnerSolver {
 public:
  Factorization() = default;

  Index size() const override { return n_; }
  FactorKind kind() const { return kind_; }
  Vector solve(const Vector& b) const override;
  Vector solve_transpose(const Vector& b) const override;

  friend Factorization factorize(const SparseMatrix& a, FactorKind kind);

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  Index n_ = 0;
  FactorKind kind_ = FactorKind::lu;
};

/// Throws SingularMatrix on a zero pivot, NotPositiveDefinite when the spd
/// kind breaks down, ContractViolation for non-square or (spd) nonsymmetric
/// input.
Factorization factorize(const SparseMatrix& a, FactorKind kind);

}  // namespace ssn

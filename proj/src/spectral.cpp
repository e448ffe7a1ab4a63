#include "ssn/spectral.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>

namespace ssn {

namespace {

void check_threshold(Index n, Index threshold) {
  if (n > threshold)
    throw DenseThresholdExceeded("dense diagnostics requested for n = " + std::to_string(n) +
                                 " above the threshold " + std::to_string(threshold) +
                                 "; use a smaller instance or raise dense_threshold");
}

struct DenseParts {
  DenseMatrix K;       // sqrt(alpha) L + Mbar Pi_I
  Vector m, msqrt;
  Eigen::PartialPivLU<DenseMatrix> K_lu;
};

DenseParts dense_parts(const ProblemInstance& prob, const ActiveSetPartition& part, double alpha) {
  DenseParts d;
  d.K = SchurApprox::factor_matrix(prob, part, alpha).to_dense();
  d.m = prob.mass();
  d.msqrt = d.m.cwiseSqrt();
  d.K_lu = d.K.partialPivLu();
  return d;
}

// M^{1/2} K^{-1} B M^{-1/2}
DenseMatrix sandwich(const DenseParts& d, const DenseMatrix& B) {
  DenseMatrix Z = d.K_lu.solve(B * d.msqrt.cwiseInverse().asDiagonal());
  return d.msqrt.asDiagonal() * Z;
}

// X = M^{1/2} K^{-1} sqrt(alpha) L M^{-1/2} and Y = M^{1/2} K^{-1} Mbar Pi_I M^{-1/2} = I - X.
std::pair<DenseMatrix, DenseMatrix> xy_blocks(const ProblemInstance& prob,
                                              const ActiveSetPartition& part, double alpha) {
  const DenseParts d = dense_parts(prob, part, alpha);
  DenseMatrix X = sandwich(d, std::sqrt(alpha) * prob.L.to_dense());
  DenseMatrix Y = sandwich(d, prob.Mbar.to_dense() * part.inactive_mask().asDiagonal());
  return {std::move(X), std::move(Y)};
}

double spectral_norm(const DenseMatrix& X) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(X.transpose() * X, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

std::vector<double> sorted_real(const Vector& ev) {
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end());
  return out;
}

Index count_units(const std::vector<double>& ev) {
  return static_cast<Index>(
      std::count_if(ev.begin(), ev.end(), [](double l) { return std::abs(l - 1.0) <= kUnitRadius; }));
}

void collect_complex(const Eigen::VectorXcd& ev, std::vector<double>& re, double& max_imag) {
  for (Index i = 0; i < ev.size(); ++i) {
    re.push_back(ev[i].real());
    max_imag = std::max(max_imag, std::abs(ev[i].imag()));
  }
}

// Lower-triangular-free square root of the block-diagonal preconditioner:
// P = R R^T.
DenseMatrix bdf_root(const SaddleSystem& sys, double alpha) {
  const auto& prob = sys.problem();
  const auto& part = sys.partition();
  const Index n = prob.n();
  const DenseParts d = dense_parts(prob, part, alpha);
  const DenseMatrix G = d.K * d.msqrt.cwiseInverse().asDiagonal();
  DenseMatrix R = DenseMatrix::Zero(sys.size(), sys.size());
  R.topLeftCorner(n, n) = d.msqrt.asDiagonal();
  if (sys.formulation() == Formulation::reduced) {
    R.block(n, n, n, n) = G / std::sqrt(alpha);
    return R;
  }
  const Index na = part.n_active();
  R.block(n, n, n, n) = std::sqrt(alpha) * DenseMatrix(d.msqrt.asDiagonal());
  // R_s = alpha^{-1/2} U blkdiag(G, D_A^{1/2}), U = [I, -Mbar Pi_A M^{-1} P_A^T; 0, I]
  DenseMatrix U = DenseMatrix::Identity(n + na, n + na);
  const DenseMatrix Mbar = prob.Mbar.to_dense();
  for (Index k = 0; k < na; ++k) {
    const Index i = part.A[static_cast<std::size_t>(k)];
    U.block(0, n + k, n, 1) = -Mbar.col(i) / d.m[i];
  }
  DenseMatrix D = DenseMatrix::Zero(n + na, n + na);
  D.topLeftCorner(n, n) = G;
  for (Index k = 0; k < na; ++k) D(n + k, n + k) = d.msqrt[part.A[static_cast<std::size_t>(k)]];
  R.block(2 * n, 2 * n, n + na, n + na) = U * D / std::sqrt(alpha);
  return R;
}

}  // namespace

double xi_from_zeta(double zeta) { return zeta * zeta + (1.0 + zeta) * (1.0 + zeta); }

std::pair<Interval, Interval> bdf_intervals(Formulation f, double zeta) {
  require(f != Formulation::full, "bdf_intervals: augmented or reduced formulation required");
  const double xi = xi_from_zeta(zeta);
  const double neg_hi = 0.5 * (1.0 - std::sqrt(3.0));
  if (f == Formulation::augmented) {
    return {Interval{0.5 * (1.0 - std::sqrt(1.0 + 4.0 * xi)), neg_hi},
            Interval{1.0, 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * xi))}};
  }
  return {Interval{0.5 * (-xi + 1.0 - std::sqrt((xi + 1.0) * (xi + 1.0) + 4.0 * zeta * zeta)),
                   neg_hi},
          Interval{1.0, 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * zeta * zeta))}};
}

DenseMatrix dense_schur(const ProblemInstance& prob, const ActiveSetPartition& part, double alpha,
                        Index threshold) {
  check_threshold(prob.n(), threshold);
  const Vector minv = prob.mass().cwiseInverse();
  const DenseMatrix L = prob.L.to_dense();
  const DenseMatrix Mbar = prob.Mbar.to_dense();
  const Vector w = minv.cwiseProduct(part.inactive_mask());
  return alpha * L * minv.asDiagonal() * L.transpose() + Mbar * w.asDiagonal() * Mbar.transpose();
}

DenseMatrix dense_schur_approx(const ProblemInstance& prob, const ActiveSetPartition& part,
                               double alpha, Index threshold) {
  check_threshold(prob.n(), threshold);
  const DenseMatrix K = SchurApprox::factor_matrix(prob, part, alpha).to_dense();
  return K * prob.mass().cwiseInverse().asDiagonal() * K.transpose();
}

double compute_zeta(const ProblemInstance& prob, const ActiveSetPartition& part, double alpha,
                    Index threshold) {
  check_threshold(prob.n(), threshold);
  return spectral_norm(xy_blocks(prob, part, alpha).first);
}

BoundReport eig_pencil_S(const ProblemInstance& prob, const ActiveSetPartition& part, double alpha,
                         Index threshold) {
  check_threshold(prob.n(), threshold);
  const auto [X, Y] = xy_blocks(prob, part, alpha);
  BoundReport r;
  r.label = "schur";
  r.n = prob.n();
  r.n_active = part.n_active();
  r.n_inactive = part.n_inactive();
  r.zeta = spectral_norm(X);
  r.xi = xi_from_zeta(r.zeta);
  r.negative = Interval{1.0, 0.0};
  r.positive = Interval{0.5, r.xi};
  // S_hat^{-1} S is similar to X X^T + Y Y^T.
  const DenseMatrix H = X * X.transpose() + Y * Y.transpose();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(H, Eigen::EigenvaluesOnly);
  r.eigenvalues = sorted_real(es.eigenvalues());
  for (double l : r.eigenvalues)
    if (l < 0.5 - 1e-9 || l > r.xi + 1e-7 * r.xi) r.violations.push_back(l);
  r.unit_count = count_units(r.eigenvalues);
  r.expected_unit_lower = std::max<Index>(0, r.n - 2 * r.n_inactive);
  return r;
}

DenseMatrix dense_preconditioned(const SaddleSystem& sys, const Preconditioner& P) {
  require(P.size() == sys.size(), "dense_preconditioned: size mismatch");
  const DenseMatrix J = sys.assemble_matrix().to_dense();
  DenseMatrix T(J.rows(), J.cols());
  for (Index j = 0; j < J.cols(); ++j) T.col(j) = P.apply_inverse(J.col(j));
  return T;
}

BoundReport eig_preconditioned(const SaddleSystem& sys, const Preconditioner& P, Index threshold) {
  const auto& prob = sys.problem();
  const auto& part = sys.partition();
  const Index n = prob.n();
  check_threshold(n, threshold);
  require(sys.formulation() == formulation_of(P.kind()),
          "eig_preconditioned: preconditioner does not match the system");
  const double alpha = P.schur().alpha();

  BoundReport r;
  r.label = to_string(P.kind());
  r.n = n;
  r.n_active = part.n_active();
  r.n_inactive = part.n_inactive();
  r.zeta = compute_zeta(prob, part, alpha, threshold);
  r.xi = xi_from_zeta(r.zeta);

  if (is_block_diagonal(P.kind())) {
    std::tie(r.negative, r.positive) = bdf_intervals(sys.formulation(), r.zeta);
    const DenseMatrix J = sys.assemble_matrix().to_dense();
    const Eigen::PartialPivLU<DenseMatrix> R_lu(bdf_root(sys, alpha));
    const DenseMatrix Y = R_lu.solve(J);
    const DenseMatrix Z = R_lu.solve(DenseMatrix(Y.transpose()));
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (Z + Z.transpose()),
                                                  Eigen::EigenvaluesOnly);
    r.eigenvalues = sorted_real(es.eigenvalues());
    for (double l : r.eigenvalues) {
      const double tol = 1e-7 * std::max(1.0, std::abs(l));
      if (!r.negative.contains(l, tol) && !r.positive.contains(l, tol)) r.violations.push_back(l);
    }
    r.unit_count = count_units(r.eigenvalues);
    return r;
  }

  r.negative = Interval{1.0, 0.0};
  r.positive = Interval{0.5, r.xi};
  const DenseMatrix T = dense_preconditioned(sys, P);
  const Index d1 = sys.formulation() == Formulation::augmented ? 2 * n : n;
  const Index d2 = T.rows() - d1;
  // Block upper triangular with identity leading block in exact arithmetic;
  // use that split when it holds numerically, else fall back to the whole matrix.
  const double scale = std::max(1.0, T.cwiseAbs().maxCoeff());
  const bool split =
      (T.topLeftCorner(d1, d1) - DenseMatrix::Identity(d1, d1)).cwiseAbs().maxCoeff() <=
          1e-10 * scale &&
      T.bottomLeftCorner(d2, d1).cwiseAbs().maxCoeff() <= 1e-10 * scale;
  std::vector<double> re;
  if (split) {
    collect_complex(Eigen::EigenSolver<DenseMatrix>(T.topLeftCorner(d1, d1), false).eigenvalues(),
                    re, r.max_imag);
    collect_complex(
        Eigen::EigenSolver<DenseMatrix>(T.bottomRightCorner(d2, d2), false).eigenvalues(), re,
        r.max_imag);
  } else {
    collect_complex(Eigen::EigenSolver<DenseMatrix>(T, false).eigenvalues(), re, r.max_imag);
  }
  std::sort(re.begin(), re.end());
  r.eigenvalues = std::move(re);
  for (double l : r.eigenvalues) {
    if (std::abs(l - 1.0) <= kUnitRadius) continue;
    if (l < 0.5 - 1e-9 || l > r.xi + 1e-7 * r.xi) r.violations.push_back(l);
  }
  r.unit_count = count_units(r.eigenvalues);
  r.expected_unit_lower = sys.formulation() == Formulation::augmented
                              ? 3 * n + r.n_active - 2 * r.n_inactive
                              : 2 * n - 2 * r.n_inactive;
  r.expected_unit_lower = std::max<Index>(0, r.expected_unit_lower);
  return r;
}

void write_bound_json(const BoundReport& r, std::ostream& os) {
  nlohmann::json j;
  j["label"] = r.label;
  j["n"] = r.n;
  j["n_active"] = r.n_active;
  j["n_inactive"] = r.n_inactive;
  j["zeta"] = r.zeta;
  j["xi"] = r.xi;
  j["negative_interval"] = {r.negative.lo, r.negative.hi};
  j["positive_interval"] = {r.positive.lo, r.positive.hi};
  j["eigenvalues"] = r.eigenvalues;
  j["max_imag"] = r.max_imag;
  j["violations"] = r.violations;
  j["unit_count"] = r.unit_count;
  j["expected_unit_lower"] = r.expected_unit_lower;
  os << j.dump(2) << '\n';
}

void write_bound_csv_header(std::ostream& os) {
  os << "iteration,label,n,n_active,n_inactive,zeta,xi,neg_lo,neg_hi,pos_lo,pos_hi,min_eig,"
        "max_eig,violations,unit_count,expected_unit_lower\n";
}

void write_bound_csv_row(Index iteration, const BoundReport& r, std::ostream& os) {
  const auto old = os.precision(12);
  os << iteration << ',' << r.label << ',' << r.n << ',' << r.n_active << ',' << r.n_inactive
     << ',' << r.zeta << ',' << r.xi << ',' << r.negative.lo << ',' << r.negative.hi << ','
     << r.positive.lo << ',' << r.positive.hi << ',' << r.min_eigenvalue() << ','
     << r.max_eigenvalue() << ',' << r.violations.size() << ',' << r.unit_count << ','
     << r.expected_unit_lower << '\n';
  os.precision(old);
}

}  // namespace ssn

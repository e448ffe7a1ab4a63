#pragma once

// Dense eigenvalue diagnostics for the Schur approximation and the
// preconditioned Newton systems. Everything here is O(n^3) and gated by a
// size threshold.

#include "ssn/precond.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ssn {

inline constexpr Index kDefaultDenseThreshold = 4096;
/// Radius used to count an eigenvalue as equal to 1.
inline constexpr double kUnitRadius = 1e-8;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
};

struct BoundReport {
  std::string label;          // "schur", or a preconditioner kind
  Index n = 0, n_active = 0, n_inactive = 0;
  double zeta = 0.0;
  double xi = 0.0;
  Interval negative;          // empty (lo > hi) when not applicable
  Interval positive;
  std::vector<double> eigenvalues;  // real parts, ascending
  double max_imag = 0.0;
  std::vector<double> violations;
  Index unit_count = 0;
  Index expected_unit_lower = 0;

  double min_eigenvalue() const { return eigenvalues.empty() ? 0.0 : eigenvalues.front(); }
  double max_eigenvalue() const { return eigenvalues.empty() ? 0.0 : eigenvalues.back(); }
};

double xi_from_zeta(double zeta);

/// Eigenvalue inclusion intervals (negative, positive) for the block-diagonally
/// preconditioned augmented or reduced system.
std::pair<Interval, Interval> bdf_intervals(Formulation f, double zeta);

/// Dense exact Schur complement alpha L M^{-1} L^T + Mbar Pi_I M^{-1} Mbar^T.
DenseMatrix dense_schur(const ProblemInstance& prob, const ActiveSetPartition& part, double alpha,
                        Index threshold = kDefaultDenseThreshold);
/// Dense (sqrt(alpha) L + Mbar Pi_I) M^{-1} (sqrt(alpha) L + Mbar Pi_I)^T.
DenseMatrix dense_schur_approx(const ProblemInstance& prob, const ActiveSetPartition& part,
                               double alpha, Index threshold = kDefaultDenseThreshold);

/// |M^{1/2} (sqrt(alpha) L + Mbar Pi_I)^{-1} sqrt(alpha) L M^{-1/2}|_2.
double compute_zeta(const ProblemInstance& prob, const ActiveSetPartition& part, double alpha,
                    Index threshold = kDefaultDenseThreshold);

/// Eigenvalues of S_hat^{-1} S checked against [1/2, xi].
BoundReport eig_pencil_S(const ProblemInstance& prob, const ActiveSetPartition& part, double alpha,
                         Index threshold = kDefaultDenseThreshold);

/// Eigenvalues of P^{-1} J. Block-diagonal kinds are checked against the
/// two-interval inclusion, indefinite kinds against {1} U [1/2, xi] plus the
/// unit-eigenvalue lower bound.
BoundReport eig_preconditioned(const SaddleSystem& sys, const Preconditioner& P,
                               Index threshold = kDefaultDenseThreshold);

/// Column by column P^{-1} J.
DenseMatrix dense_preconditioned(const SaddleSystem& sys, const Preconditioner& P);

void write_bound_json(const BoundReport& r, std::ostream& os);
/// Header for write_bound_csv_row, prefixed by an "iteration" column.
void write_bound_csv_header(std::ostream& os);
void write_bound_csv_row(Index iteration, const BoundReport& r, std::ostream& os);

}  // namespace ssn

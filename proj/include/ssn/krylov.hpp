#pragma once

// Preconditioned GMRES (left, full, no restart) and MINRES.
// Both certify the unpreconditioned residual |b - J x| <= tol |b| before
// reporting convergence.

#include "ssn/common.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ssn {

struct KrylovStats {
  Index iterations = 0;
  /// |b - J x| / |b| of the returned iterate.
  double final_relative_residual = 0.0;
  bool converged = false;
  std::optional<std::string> breakdown;
  /// Preconditioned residual estimate per iteration, relative to its start value.
  std::vector<double> residual_history;
};

using KrylovResult = std::pair<Vector, KrylovStats>;

KrylovResult gmres(const LinearMap& apply_J, const LinearMap& apply_P_inverse, const Vector& b,
                   double tol, Index max_iter = 500);

/// J symmetric, P symmetric positive definite. Throws NotPositiveDefinite
/// when <v, P^{-1} v> < 0 is observed.
KrylovResult minres(const LinearMap& apply_J, const LinearMap& apply_P_inverse, const Vector& b,
                    double tol, Index max_iter = 500);

/// Identity operator, handy as "no preconditioner".
LinearMap identity_op();

}  // namespace ssn

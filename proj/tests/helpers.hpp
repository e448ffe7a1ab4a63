#pragma once

// Shared fixtures for the unit tests: small random problems and
// independent dense reference constructions.

#include "ssn/optimality.hpp"
#include "ssn/problems.hpp"

#include <random>

namespace testutil {

using ssn::DenseMatrix;
using ssn::Index;
using ssn::Vector;

inline Vector random_vector(Index n, std::mt19937& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline DenseMatrix random_dense(Index r, Index c, std::mt19937& rng) {
  DenseMatrix a(r, c);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) a(i, j) = d(rng);
  return a;
}

/// Nonsymmetric, diagonally dominant L; diagonal positive M; Mbar = M + small
/// perturbation. Bounds and weights chosen so all five sets occur.
inline ssn::ProblemInstance random_problem(Index n, std::mt19937& rng, bool symmetric = false) {
  DenseMatrix L = random_dense(n, n, rng) * 0.3;
  if (symmetric) L = 0.5 * (L + L.transpose());
  for (Index i = 0; i < n; ++i) L(i, i) = 2.0 + std::abs(L(i, i)) + 0.3 * static_cast<double>(n);
  ssn::ProblemInstance p;
  p.name = "random";
  p.grid = ssn::GridSpec::from_points(2, 1);
  p.L = ssn::SparseMatrix::from_dense(L);
  const Vector m = random_vector(n, rng, 0.5, 1.5);
  p.M = ssn::SparseMatrix::diagonal(m);
  DenseMatrix mbar = DenseMatrix(m.asDiagonal()) + 0.1 * random_dense(n, n, rng);
  p.Mbar = ssn::SparseMatrix::from_dense(mbar);
  p.y_d = random_vector(n, rng, -3.0, 3.0);
  p.f = random_vector(n, rng);
  p.a = Vector::Constant(n, -1.0);
  p.b = Vector::Constant(n, 1.0);
  p.alpha = 0.5;
  p.beta = 0.3;
  p.c = 1.0 / p.alpha;
  return p;
}

inline ssn::IterateState random_iterate(Index n, std::mt19937& rng) {
  return ssn::IterateState(random_vector(n, rng, -2, 2), random_vector(n, rng, -2, 2),
                           random_vector(n, rng, -2, 2), random_vector(n, rng, -2, 2));
}

/// Dense full generalized Jacobian written from the block definitions.
inline DenseMatrix dense_full_jacobian(const ssn::ProblemInstance& p,
                                       const ssn::ActiveSetPartition& part) {
  const Index n = p.n();
  const DenseMatrix M = p.M.to_dense(), L = p.L.to_dense(), Mb = p.Mbar.to_dense();
  DenseMatrix PiA = DenseMatrix::Zero(n, n), PiI = DenseMatrix::Zero(n, n);
  for (Index i : part.A) PiA(i, i) = 1.0;
  for (Index i : part.I) PiI(i, i) = 1.0;
  DenseMatrix J = DenseMatrix::Zero(4 * n, 4 * n);
  J.block(0, 0, n, n) = M;
  J.block(0, 2 * n, n, n) = L.transpose();
  J.block(n, n, n, n) = p.alpha * M;
  J.block(n, 2 * n, n, n) = -Mb.transpose();
  J.block(n, 3 * n, n, n) = M;
  J.block(2 * n, 0, n, n) = L;
  J.block(2 * n, n, n, n) = -Mb;
  J.block(3 * n, n, n, n) = PiA * M;
  J.block(3 * n, 3 * n, n, n) = -p.c * PiI * M;
  return J;
}

/// Theta evaluated with min/max (no set classification).
inline Vector theta_minmax(const ssn::IterateState& x, const ssn::ProblemInstance& p) {
  const Index n = p.n();
  const DenseMatrix M = p.M.to_dense(), L = p.L.to_dense(), Mb = p.Mbar.to_dense();
  Vector F(n);
  for (Index i = 0; i < n; ++i) {
    const double u = x.u()[i], mu = x.mu()[i], c = p.c, be = p.beta;
    F[i] = u - std::max(0.0, u + c * (mu - be)) - std::min(0.0, u + c * (mu + be)) +
           std::max(0.0, (u - p.b[i]) + c * (mu - be)) + std::min(0.0, (u - p.a[i]) + c * (mu + be));
  }
  Vector t(4 * n);
  t << M * (x.y() - p.y_d) + L.transpose() * x.p(), p.alpha * M * x.u() - Mb.transpose() * x.p() + M * x.mu(),
      L * x.y() - Mb * x.u() - p.f, M * F;
  return t;
}

}  // namespace testutil

#include "ssn/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssn {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Correction cycles allowed once a cycle stalls at the rounding floor.
constexpr int kMaxRefinements = 3;

enum class CycleEnd { converged, floor, exhausted, limit };

struct Cycle {
  Vector dx;
  Index iterations = 0;
  CycleEnd end = CycleEnd::limit;
};

// Next inner target after a failed true-residual check.
double tightened(double current, double estimate, double true_target, double true_res) {
  const double factor = std::clamp(0.5 * true_target / true_res, 1e-3, 0.5);
  return std::min(current, estimate) * factor;
}

// One left-preconditioned GMRES cycle for J dx = r, no restart inside.
Cycle gmres_cycle(const LinearMap& J, const LinearMap& Pinv, const Vector& r, double target,
                  Index budget, double scale, std::vector<double>& history) {
  const Index N = r.size();
  Cycle c;
  c.dx = Vector::Zero(N);
  const Vector z0 = Pinv(r);
  require(z0.size() == N, "gmres: preconditioner dimension mismatch");
  const double beta = z0.norm();
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    c.end = CycleEnd::exhausted;
    return c;
  }

  std::vector<Vector> V;
  V.push_back(z0 / beta);
  DenseMatrix R = DenseMatrix::Zero(budget + 1, budget);
  Vector cs = Vector::Zero(budget), sn = Vector::Zero(budget);
  Vector g = Vector::Zero(budget + 1);
  g[0] = beta;
  double pre_target = target / r.norm() * beta;
  double best_res = r.norm();

  for (Index k = 0; k < budget; ++k) {
    Vector w = Pinv(J(V[static_cast<std::size_t>(k)]));
    Vector h = Vector::Zero(k + 2);
    for (int pass = 0; pass < 2; ++pass) {
      for (Index j = 0; j <= k; ++j) {
        const double hij = V[static_cast<std::size_t>(j)].dot(w);
        h[j] += hij;
        w.noalias() -= hij * V[static_cast<std::size_t>(j)];
      }
    }
    const double hnext = w.norm();
    h[k + 1] = hnext;
    for (Index j = 0; j < k; ++j) {
      const double t = cs[j] * h[j] + sn[j] * h[j + 1];
      h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
      h[j] = t;
    }
    const double rho = std::hypot(h[k], h[k + 1]);
    if (rho == 0.0) {
      c.end = CycleEnd::exhausted;
      return c;
    }
    cs[k] = h[k] / rho;
    sn[k] = h[k + 1] / rho;
    R.col(k).head(k + 1) = h.head(k);
    R(k, k) = rho;
    g[k + 1] = -sn[k] * g[k];
    g[k] = cs[k] * g[k];

    const double est = std::abs(g[k + 1]);
    history.push_back(est / scale);
    c.iterations = k + 1;

    const bool happy = hnext <= 1e-14 * rho;
    if (est <= pre_target || happy || k + 1 == budget) {
      const Vector y =
          R.topLeftCorner(k + 1, k + 1).triangularView<Eigen::Upper>().solve(g.head(k + 1));
      Vector xk = Vector::Zero(N);
      for (Index j = 0; j <= k; ++j) xk.noalias() += y[j] * V[static_cast<std::size_t>(j)];
      const double rt = (r - J(xk)).norm();
      if (rt < best_res) {
        best_res = rt;
        c.dx = xk;
      }
      if (rt <= target) {
        c.end = CycleEnd::converged;
        return c;
      }
      if (happy) {
        c.end = CycleEnd::exhausted;
        return c;
      }
      if (est <= kEps * beta) {
        c.end = CycleEnd::floor;
        return c;
      }
      if (k + 1 == budget) break;
      pre_target = tightened(pre_target, est, target, rt);
    }
    V.push_back(w / hnext);
  }
  c.end = CycleEnd::limit;
  return c;
}

// One preconditioned MINRES cycle for J dx = r.
Cycle minres_cycle(const LinearMap& J, const LinearMap& Pinv, const Vector& r, double target,
                   Index budget, double scale, std::vector<double>& history) {
  const Index N = r.size();
  Cycle c;
  c.dx = Vector::Zero(N);
  Vector x = Vector::Zero(N);

  Vector r1 = r;
  Vector y = Pinv(r1);
  require(y.size() == N, "minres: preconditioner dimension mismatch");
  double beta1 = r1.dot(y);
  if (beta1 < 0.0 || (beta1 == 0.0 && r1.squaredNorm() > 0.0))
    throw NotPositiveDefinite("minres: preconditioner is not positive definite");
  beta1 = std::sqrt(beta1);

  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  Vector w = Vector::Zero(N), w1, w2 = Vector::Zero(N);
  Vector r2 = r1;
  double pre_target = target / r.norm() * beta1;
  double best_res = r.norm();

  for (Index itn = 1; itn <= budget; ++itn) {
    const Vector v = y / beta;
    y = J(v);
    if (itn >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = Pinv(r2);
    oldb = beta;
    const double bb = r2.dot(y);
    if (bb < 0.0) throw NotPositiveDefinite("minres: preconditioner is not positive definite");
    beta = std::sqrt(bb);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), kEps);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x.noalias() += phi * w;

    history.push_back(phibar / scale);
    c.iterations = itn;

    const bool lanczos_done = beta <= kEps * beta1;
    if (phibar <= pre_target || lanczos_done || itn == budget) {
      const double rt = (r - J(x)).norm();
      if (rt < best_res) {
        best_res = rt;
        c.dx = x;
      }
      if (rt <= target) {
        c.end = CycleEnd::converged;
        return c;
      }
      if (lanczos_done) {
        c.end = CycleEnd::exhausted;
        return c;
      }
      if (phibar <= kEps * beta1) {
        c.end = CycleEnd::floor;
        return c;
      }
      if (itn == budget) break;
      pre_target = tightened(pre_target, phibar, target, rt);
    }
  }
  c.end = CycleEnd::limit;
  return c;
}

template <class CycleFn>
KrylovResult refine(const LinearMap& J, const LinearMap& Pinv, const Vector& b, double tol,
                    Index max_iter, CycleFn cycle) {
  require(tol > 0.0, "krylov: tol must be positive");
  require(max_iter > 0, "krylov: max_iter must be positive");
  KrylovStats st;
  Vector x = Vector::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    st.converged = true;
    return {x, st};
  }
  const double target = tol * bnorm;
  const double scale = Pinv(b).norm();
  Vector r = b;
  double rt = bnorm;
  for (int pass = 0; pass <= kMaxRefinements; ++pass) {
    const Index budget = max_iter - st.iterations;
    if (budget <= 0) break;
    Cycle c = cycle(J, Pinv, r, target, budget, scale > 0.0 ? scale : 1.0, st.residual_history);
    st.iterations += c.iterations;
    x += c.dx;
    r = b - J(x);
    rt = r.norm();
    if (rt <= target) {
      st.converged = true;
      st.breakdown.reset();
      break;
    }
    switch (c.end) {
      case CycleEnd::converged:
      case CycleEnd::floor:
        st.breakdown = "true residual stalled at the rounding floor";
        continue;
      case CycleEnd::exhausted:
        st.breakdown = "Krylov space exhausted before the true residual target";
        if (c.iterations == 0) pass = kMaxRefinements;
        continue;
      case CycleEnd::limit:
        st.breakdown = "iteration limit reached";
        pass = kMaxRefinements;
        continue;
    }
  }
  st.final_relative_residual = rt / bnorm;
  return {x, st};
}

}  // namespace

LinearMap identity_op() {
  return [](const Vector& v) { return v; };
}

KrylovResult gmres(const LinearMap& apply_J, const LinearMap& apply_P_inverse, const Vector& b,
                   double tol, Index max_iter) {
  return refine(apply_J, apply_P_inverse, b, tol, max_iter, gmres_cycle);
}

KrylovResult minres(const LinearMap& apply_J, const LinearMap& apply_P_inverse, const Vector& b,
                    double tol, Index max_iter) {
  return refine(apply_J, apply_P_inverse, b, tol, max_iter, minres_cycle);
}

}  // namespace ssn

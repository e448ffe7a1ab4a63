#include "ssn/optimality.hpp"

#include <cmath>

namespace ssn {

Vector ActiveSetPartition::inactive_mask() const {
  Vector m = Vector::Zero(n());
  for (Index i : I) m[i] = 1.0;
  return m;
}

Vector ActiveSetPartition::active_mask() const {
  Vector m = Vector::Zero(n());
  for (Index i : A) m[i] = 1.0;
  return m;
}

Vector ActiveSetPartition::restrict_active(const Vector& v) const {
  require(v.size() == n(), "restrict_active: dimension mismatch");
  Vector w(n_active());
  for (Index k = 0; k < n_active(); ++k) w[k] = v[A[k]];
  return w;
}

Vector ActiveSetPartition::extend_active(const Vector& w) const {
  require(w.size() == n_active(), "extend_active: dimension mismatch");
  Vector v = Vector::Zero(n());
  for (Index k = 0; k < n_active(); ++k) v[A[k]] = w[k];
  return v;
}

ActiveSetPartition ActiveSetPartition::from_labels(std::vector<SetLabel> labels) {
  ActiveSetPartition p;
  p.label = std::move(labels);
  for (Index i = 0; i < p.n(); ++i) {
    switch (p.label[i]) {
      case SetLabel::Ab: p.Ab.push_back(i); break;
      case SetLabel::Aa: p.Aa.push_back(i); break;
      case SetLabel::A0: p.A0.push_back(i); break;
      case SetLabel::Iplus: p.Iplus.push_back(i); break;
      case SetLabel::Iminus: p.Iminus.push_back(i); break;
    }
    (is_active(p.label[i]) ? p.A : p.I).push_back(i);
  }
  return p;
}

Vector ResidualBlocks::stacked() const {
  const Index n = theta_y.size();
  Vector s(4 * n);
  s << theta_y, theta_u, theta_p, theta_mu;
  return s;
}

double ResidualBlocks::norm() const {
  return std::sqrt(theta_y.squaredNorm() + theta_u.squaredNorm() + theta_p.squaredNorm() +
                   theta_mu.squaredNorm());
}

IterateState::IterateState(Vector y, Vector u, Vector p, Vector mu)
    : y_(std::move(y)), u_(std::move(u)), p_(std::move(p)), mu_(std::move(mu)) {
  require(u_.size() == y_.size() && p_.size() == y_.size() && mu_.size() == y_.size(),
          "IterateState: blocks must have equal length");
}

IterateState IterateState::zeros(Index n) {
  return IterateState(Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n));
}

void IterateState::set_y(Vector v) {
  require(v.size() == n(), "IterateState::set_y: dimension mismatch");
  y_ = std::move(v);
  residual_.reset();
}

void IterateState::set_u(Vector v) {
  require(v.size() == n(), "IterateState::set_u: dimension mismatch");
  u_ = std::move(v);
  residual_.reset();
}

void IterateState::set_p(Vector v) {
  require(v.size() == n(), "IterateState::set_p: dimension mismatch");
  p_ = std::move(v);
  residual_.reset();
}

void IterateState::set_mu(Vector v) {
  require(v.size() == n(), "IterateState::set_mu: dimension mismatch");
  mu_ = std::move(v);
  residual_.reset();
}

const ResidualBlocks& IterateState::residual() const {
  if (!residual_) throw ContractViolation("IterateState: residual cache is stale");
  return *residual_;
}

double IterateState::theta_value() const {
  if (!residual_) throw ContractViolation("IterateState: residual cache is stale");
  return theta_;
}

Vector IterateState::stacked() const {
  Vector s(4 * n());
  s << y_, u_, p_, mu_;
  return s;
}

ActiveSetPartition classify(const Vector& u, const Vector& mu, const ProblemInstance& prob) {
  const Index n = prob.n();
  require(u.size() == n && mu.size() == n, "classify: dimension mismatch");
  const double c = prob.c;
  const double beta = prob.beta;
  std::vector<SetLabel> labels(n);
  for (Index i = 0; i < n; ++i) {
    const double up = u[i] + c * (mu[i] - beta);  // enters max(0, .)
    const double lo = u[i] + c * (mu[i] + beta);  // enters min(0, .)
    if (up - prob.b[i] > 0.0) {
      labels[i] = SetLabel::Ab;
    } else if (lo - prob.a[i] < 0.0) {
      labels[i] = SetLabel::Aa;
    } else if (lo >= 0.0 && up <= 0.0) {
      labels[i] = SetLabel::A0;
    } else if (up > 0.0) {
      labels[i] = SetLabel::Iplus;
    } else {
      labels[i] = SetLabel::Iminus;
    }
  }
  return ActiveSetPartition::from_labels(std::move(labels));
}

Vector complementarity_F(const Vector& u, const Vector& mu, const ActiveSetPartition& part,
                         const ProblemInstance& prob) {
  const Index n = prob.n();
  require(u.size() == n && mu.size() == n && part.n() == n,
          "complementarity_F: dimension mismatch");
  Vector F(n);
  for (Index i = 0; i < n; ++i) {
    switch (part.label[i]) {
      case SetLabel::A0: F[i] = u[i]; break;
      case SetLabel::Ab: F[i] = u[i] - prob.b[i]; break;
      case SetLabel::Aa: F[i] = u[i] - prob.a[i]; break;
      case SetLabel::Iplus: F[i] = -prob.c * (mu[i] - prob.beta); break;
      case SetLabel::Iminus: F[i] = -prob.c * (mu[i] + prob.beta); break;
    }
  }
  return F;
}

ResidualBlocks evaluate_residual(const IterateState& x, const ProblemInstance& prob) {
  require(x.n() == prob.n(), "residual: iterate and problem sizes differ");
  const Vector m = prob.mass();
  ResidualBlocks r;
  r.theta_y = m.cwiseProduct(x.y() - prob.y_d) + matvec_transpose(prob.L, x.p());
  r.theta_u = prob.alpha * m.cwiseProduct(x.u()) - matvec_transpose(prob.Mbar, x.p()) +
              m.cwiseProduct(x.mu());
  r.theta_p = matvec(prob.L, x.y()) - matvec(prob.Mbar, x.u()) - prob.f;
  const ActiveSetPartition part = classify(x.u(), x.mu(), prob);
  r.theta_mu = m.cwiseProduct(complementarity_F(x.u(), x.mu(), part, prob));
  return r;
}

const ResidualBlocks& residual_Theta(IterateState& x, const ProblemInstance& prob) {
  ResidualBlocks r = evaluate_residual(x, prob);
  const double nrm = r.norm();
  x.residual_ = std::move(r);
  x.theta_ = 0.5 * nrm * nrm;
  return *x.residual_;
}

double merit(const IterateState& x) { return x.theta_value(); }

}  // namespace ssn

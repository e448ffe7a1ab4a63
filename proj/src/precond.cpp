#include "ssn/precond.hpp"

#include <cmath>

namespace ssn {

SparseMatrix SchurApprox::factor_matrix(const ProblemInstance& prob,
                                        const ActiveSetPartition& part, double alpha) {
  require(part.n() == prob.n(), "SchurApprox: partition size mismatch");
  return add(scale(prob.L, std::sqrt(alpha)), scale_columns(prob.Mbar, part.inactive_mask()));
}

SchurApprox SchurApprox::build(const ProblemInstance& prob, const ActiveSetPartition& part,
                               double alpha) {
  auto solver = std::make_shared<Factorization>(
      factorize(factor_matrix(prob, part, alpha), FactorKind::lu));
  return with_solver(prob, part, alpha, std::move(solver));
}

SchurApprox SchurApprox::with_solver(const ProblemInstance& prob, const ActiveSetPartition& part,
                                     double alpha, std::shared_ptr<const InnerSolver> k_solver) {
  require(alpha > 0.0, "SchurApprox: alpha must be positive");
  require(prob.M.is_diagonal(), "SchurApprox: M must be diagonal");
  require(k_solver && k_solver->size() == prob.n(), "SchurApprox: inner solver size mismatch");
  SchurApprox s;
  s.prob_ = &prob;
  s.part_ = part;
  s.alpha_ = alpha;
  s.m_ = prob.mass();
  s.minv_ = s.m_.cwiseInverse();
  s.solver_ = std::move(k_solver);
  return s;
}

Vector SchurApprox::apply(const Vector& v) const {
  require(v.size() == size(), "SchurApprox::apply: dimension mismatch");
  const double sa = std::sqrt(alpha_);
  const Vector pi = part_.inactive_mask();
  // K^T v = sqrt(a) L^T v + Pi_I Mbar^T v
  const Vector kt = sa * matvec_transpose(prob_->L, v) +
                    pi.cwiseProduct(matvec_transpose(prob_->Mbar, v));
  const Vector t = minv_.cwiseProduct(kt);
  return sa * matvec(prob_->L, t) + matvec(prob_->Mbar, pi.cwiseProduct(t));
}

Vector SchurApprox::apply_inverse(const Vector& v) const {
  require(v.size() == size(), "SchurApprox::apply_inverse: dimension mismatch");
  return solver_->solve_transpose(m_.cwiseProduct(solver_->solve(v)));
}

const char* to_string(PrecondKind k) {
  switch (k) {
    case PrecondKind::bdf_aug: return "bdf_aug";
    case PrecondKind::ipf_aug: return "ipf_aug";
    case PrecondKind::bdf_red: return "bdf_red";
    case PrecondKind::ipf_red: return "ipf_red";
  }
  return "?";
}

bool is_block_diagonal(PrecondKind k) {
  return k == PrecondKind::bdf_aug || k == PrecondKind::bdf_red;
}

Formulation formulation_of(PrecondKind k) {
  return (k == PrecondKind::bdf_aug || k == PrecondKind::ipf_aug) ? Formulation::augmented
                                                                   : Formulation::reduced;
}

Preconditioner Preconditioner::build(PrecondKind kind, const SaddleSystem& sys) {
  const auto& prob = sys.problem();
  return build(kind, sys, SchurApprox::build(prob, sys.partition(), prob.alpha));
}

Preconditioner Preconditioner::build(PrecondKind kind, const SaddleSystem& sys,
                                     SchurApprox schur) {
  require(sys.formulation() == formulation_of(kind),
          std::string("Preconditioner: ") + to_string(kind) + " does not match a " +
              to_string(sys.formulation()) + " system");
  require(schur.size() == sys.problem().n(), "Preconditioner: Schur approximation size mismatch");
  Preconditioner p;
  p.kind_ = kind;
  p.size_ = sys.size();
  p.sys_ = sys;
  p.schur_ = std::move(schur);
  return p;
}

Vector Preconditioner::apply_inverse(const Vector& v) const {
  return is_block_diagonal(kind_) ? apply_bdf(v) : apply_ipf(v);
}

LinearMap Preconditioner::inverse_op() const {
  return [self = *this](const Vector& v) { return self.apply_inverse(v); };
}

Vector Preconditioner::apply_schur_aug_inverse(const Vector& v) const {
  require(formulation_of(kind_) == Formulation::augmented,
          "apply_schur_aug_inverse: augmented preconditioner required");
  const auto& prob = sys_.problem();
  const auto& part = sys_.partition();
  const Index n = prob.n();
  const Index na = part.n_active();
  require(v.size() == n + na, "apply_schur_aug_inverse: dimension mismatch");
  const Vector& minv = sys_.mass_inv();

  const Vector v2 = v.segment(n, na);
  const Vector w1 = v.segment(0, n) + matvec(prob.Mbar, minv.cwiseProduct(part.extend_active(v2)));
  const Vector z1 = schur_.apply_inverse(w1);
  const Vector z2 = part.restrict_active(minv).cwiseProduct(v2);
  Vector out(n + na);
  out.segment(0, n) = prob.alpha * z1;
  out.segment(n, na) =
      prob.alpha * (part.restrict_active(minv.cwiseProduct(matvec_transpose(prob.Mbar, z1))) + z2);
  return out;
}

Vector Preconditioner::apply_bdf(const Vector& v) const {
  require(is_block_diagonal(kind_), "apply_bdf: preconditioner is not block diagonal");
  require(v.size() == size_, "apply_bdf: dimension mismatch");
  const auto& prob = sys_.problem();
  const Index n = prob.n();
  const Vector& minv = sys_.mass_inv();
  Vector out(size_);
  if (kind_ == PrecondKind::bdf_red) {
    out.segment(0, n) = minv.cwiseProduct(v.segment(0, n));
    out.segment(n, n) = prob.alpha * schur_.apply_inverse(v.segment(n, n));
    return out;
  }
  out.segment(0, n) = minv.cwiseProduct(v.segment(0, n));
  out.segment(n, n) = minv.cwiseProduct(v.segment(n, n)) / prob.alpha;
  out.segment(2 * n, size_ - 2 * n) = apply_schur_aug_inverse(v.segment(2 * n, size_ - 2 * n));
  return out;
}

Vector Preconditioner::apply_ipf(const Vector& v) const {
  require(!is_block_diagonal(kind_), "apply_ipf: preconditioner is not indefinite");
  require(v.size() == size_, "apply_ipf: dimension mismatch");
  const auto& prob = sys_.problem();
  const auto& part = sys_.partition();
  const Index n = prob.n();
  const Vector& m = sys_.mass();
  const Vector& minv = sys_.mass_inv();
  Vector out(size_);

  if (kind_ == PrecondKind::ipf_red) {
    const Vector s1 = minv.cwiseProduct(v.segment(0, n));
    const Vector t2 = v.segment(n, n) - matvec(prob.L, s1);
    const Vector x2 = -prob.alpha * schur_.apply_inverse(t2);
    out.segment(0, n) = s1 - minv.cwiseProduct(matvec_transpose(prob.L, x2));
    out.segment(n, n) = x2;
    return out;
  }

  const Index na = part.n_active();
  // s1 = J11^{-1} v1
  const Vector sy = minv.cwiseProduct(v.segment(0, n));
  const Vector su = minv.cwiseProduct(v.segment(n, n)) / prob.alpha;
  // t2 = v2 - J12 s1
  Vector t2(n + na);
  t2.segment(0, n) = v.segment(2 * n, n) - matvec(prob.L, sy) + matvec(prob.Mbar, su);
  t2.segment(n, na) = v.segment(3 * n, na) - part.restrict_active(m.cwiseProduct(su));
  const Vector x2 = -apply_schur_aug_inverse(t2);
  // x1 = s1 - J11^{-1} J12^T x2
  const Vector xp = x2.segment(0, n);
  const Vector xmu = x2.segment(n, na);
  out.segment(0, n) = sy - minv.cwiseProduct(matvec_transpose(prob.L, xp));
  out.segment(n, n) =
      su - minv.cwiseProduct(-matvec_transpose(prob.Mbar, xp) +
                             m.cwiseProduct(part.extend_active(xmu))) /
               prob.alpha;
  out.segment(2 * n, n + na) = x2;
  return out;
}

}  // namespace ssn

#include "ssn/linsys.hpp"

#include "ssn/matrix_market.hpp"

#include <cmath>
#include <vector>

namespace ssn {

const char* to_string(Formulation f) {
  switch (f) {
    case Formulation::full: return "full";
    case Formulation::augmented: return "augmented";
    case Formulation::reduced: return "reduced";
  }
  return "?";
}

Vector StepVector::stacked() const {
  Vector s(4 * dy.size());
  s << dy, du, dp, dmu;
  return s;
}

StepVector StepVector::from_stacked(const Vector& v) {
  require(v.size() % 4 == 0, "StepVector::from_stacked: length not divisible by 4");
  const Index n = v.size() / 4;
  return {v.segment(0, n), v.segment(n, n), v.segment(2 * n, n), v.segment(3 * n, n)};
}

std::shared_ptr<const SaddleSystem::Data> SaddleSystem::capture(const IterateState& x,
                                                                const ActiveSetPartition& part,
                                                                const ProblemInstance& prob) {
  const Index n = prob.n();
  require(x.n() == n && part.n() == n, "assemble: iterate, partition and problem sizes differ");
  require(prob.M.is_diagonal(), "assemble: M must be diagonal");

  auto d = std::make_shared<Data>();
  d->prob = &prob;
  d->part = part;
  d->m = prob.mass();
  d->minv = d->m.cwiseInverse();
  d->pi_I = part.inactive_mask();

  // Residual with the complementarity block taken on the given partition.
  d->theta = evaluate_residual(x, prob);
  d->theta.theta_mu = d->m.cwiseProduct(complementarity_F(x.u(), x.mu(), part, prob));

  // Inactive multipliers jump to +-beta.
  d->dmu_inactive = Vector::Zero(n);
  for (Index i : part.Iplus) d->dmu_inactive[i] = prob.beta - x.mu()[i];
  for (Index i : part.Iminus) d->dmu_inactive[i] = -prob.beta - x.mu()[i];

  d->g_u = d->theta.theta_u + d->m.cwiseProduct(d->dmu_inactive);
  d->gamma_mu = part.restrict_active(d->theta.theta_mu);
  return d;
}

SaddleSystem assemble_full(const IterateState& x, const ActiveSetPartition& part,
                           const ProblemInstance& prob) {
  SaddleSystem s;
  s.formulation_ = Formulation::full;
  s.data_ = SaddleSystem::capture(x, part, prob);
  s.size_ = 4 * prob.n();
  s.rhs_ = -s.data_->theta.stacked();
  return s;
}

SaddleSystem assemble_augmented(const IterateState& x, const ActiveSetPartition& part,
                                const ProblemInstance& prob) {
  SaddleSystem s;
  s.formulation_ = Formulation::augmented;
  s.data_ = SaddleSystem::capture(x, part, prob);
  const Index n = prob.n();
  const Index na = part.n_active();
  s.size_ = 3 * n + na;
  s.rhs_.resize(s.size_);
  s.rhs_ << -s.data_->theta.theta_y, -s.data_->g_u, -s.data_->theta.theta_p, -s.data_->gamma_mu;
  return s;
}

SaddleSystem assemble_reduced(const IterateState& x, const ActiveSetPartition& part,
                              const ProblemInstance& prob) {
  SaddleSystem s;
  s.formulation_ = Formulation::reduced;
  s.data_ = SaddleSystem::capture(x, part, prob);
  const auto& d = *s.data_;
  const Index n = prob.n();
  s.size_ = 2 * n;
  // -(Theta^p + Mbar M^{-1} (P_A^T Gamma^mu + (1/alpha) Pi_I g_u))
  const Vector inner = d.minv.cwiseProduct(part.extend_active(d.gamma_mu) +
                                           d.pi_I.cwiseProduct(d.g_u) / prob.alpha);
  s.rhs_.resize(s.size_);
  s.rhs_ << -d.theta.theta_y, -(d.theta.theta_p + matvec(prob.Mbar, inner));
  return s;
}

SaddleSystem assemble(Formulation f, const IterateState& x, const ActiveSetPartition& part,
                      const ProblemInstance& prob) {
  switch (f) {
    case Formulation::full: return assemble_full(x, part, prob);
    case Formulation::augmented: return assemble_augmented(x, part, prob);
    case Formulation::reduced: return assemble_reduced(x, part, prob);
  }
  throw ContractViolation("assemble: unknown formulation");
}

Vector SaddleSystem::apply(const Vector& v) const {
  require(v.size() == size_, "SaddleSystem::apply: dimension mismatch");
  const auto& d = *data_;
  const auto& prob = *d.prob;
  const Index n = prob.n();
  const double alpha = prob.alpha;
  Vector out(size_);

  switch (formulation_) {
    case Formulation::full: {
      const auto dy = v.segment(0, n), du = v.segment(n, n), dp = v.segment(2 * n, n),
                 dmu = v.segment(3 * n, n);
      out.segment(0, n) = d.m.cwiseProduct(dy) + matvec_transpose(prob.L, dp);
      out.segment(n, n) = alpha * d.m.cwiseProduct(du) - matvec_transpose(prob.Mbar, dp) +
                          d.m.cwiseProduct(dmu);
      out.segment(2 * n, n) = matvec(prob.L, dy) - matvec(prob.Mbar, du);
      const Vector act = d.part.active_mask();
      out.segment(3 * n, n) = act.cwiseProduct(d.m.cwiseProduct(du)) -
                              prob.c * d.pi_I.cwiseProduct(d.m.cwiseProduct(dmu));
      break;
    }
    case Formulation::augmented: {
      const Index na = d.part.n_active();
      const auto dy = v.segment(0, n), du = v.segment(n, n), dp = v.segment(2 * n, n);
      const Vector dmu_a = v.segment(3 * n, na);
      out.segment(0, n) = d.m.cwiseProduct(dy) + matvec_transpose(prob.L, dp);
      out.segment(n, n) = alpha * d.m.cwiseProduct(du) - matvec_transpose(prob.Mbar, dp) +
                          d.m.cwiseProduct(d.part.extend_active(dmu_a));
      out.segment(2 * n, n) = matvec(prob.L, dy) - matvec(prob.Mbar, du);
      out.segment(3 * n, na) = d.part.restrict_active(d.m.cwiseProduct(du));
      break;
    }
    case Formulation::reduced: {
      const auto dy = v.segment(0, n), dp = v.segment(n, n);
      out.segment(0, n) = d.m.cwiseProduct(dy) + matvec_transpose(prob.L, dp);
      const Vector t = d.minv.cwiseProduct(d.pi_I.cwiseProduct(matvec_transpose(prob.Mbar, dp)));
      out.segment(n, n) = matvec(prob.L, dy) - matvec(prob.Mbar, t) / alpha;
      break;
    }
  }
  return out;
}

LinearMap SaddleSystem::op() const {
  return [self = *this](const Vector& v) { return self.apply(v); };
}

namespace {

void append_block(std::vector<Triplet>& t, const SparseMatrix& a, Index r0, Index c0, double s,
                  bool transposed = false) {
  const auto off = a.row_offsets();
  const auto col = a.col_indices();
  const auto val = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = off[i]; k < off[i + 1]; ++k) {
      if (transposed) {
        t.push_back({r0 + col[k], c0 + i, s * val[k]});
      } else {
        t.push_back({r0 + i, c0 + col[k], s * val[k]});
      }
    }
  }
}

void append_diag(std::vector<Triplet>& t, const Vector& d, Index r0, Index c0) {
  for (Index i = 0; i < d.size(); ++i) {
    if (d[i] != 0.0) t.push_back({r0 + i, c0 + i, d[i]});
  }
}

}  // namespace

SparseMatrix SaddleSystem::assemble_matrix() const {
  const auto& d = *data_;
  const auto& prob = *d.prob;
  const Index n = prob.n();
  const double alpha = prob.alpha;
  std::vector<Triplet> t;

  switch (formulation_) {
    case Formulation::full: {
      append_diag(t, d.m, 0, 0);
      append_block(t, prob.L, 0, 2 * n, 1.0, true);
      append_diag(t, alpha * d.m, n, n);
      append_block(t, prob.Mbar, n, 2 * n, -1.0, true);
      append_diag(t, d.m, n, 3 * n);
      append_block(t, prob.L, 2 * n, 0, 1.0);
      append_block(t, prob.Mbar, 2 * n, n, -1.0);
      for (Index i = 0; i < n; ++i) {
        if (is_active(d.part.label[i])) {
          t.push_back({3 * n + i, n + i, d.m[i]});
        } else {
          t.push_back({3 * n + i, 3 * n + i, -prob.c * d.m[i]});
        }
      }
      break;
    }
    case Formulation::augmented: {
      append_diag(t, d.m, 0, 0);
      append_block(t, prob.L, 0, 2 * n, 1.0, true);
      append_diag(t, alpha * d.m, n, n);
      append_block(t, prob.Mbar, n, 2 * n, -1.0, true);
      append_block(t, prob.L, 2 * n, 0, 1.0);
      append_block(t, prob.Mbar, 2 * n, n, -1.0);
      for (Index k = 0; k < d.part.n_active(); ++k) {
        const Index i = d.part.A[k];
        t.push_back({n + i, 3 * n + k, d.m[i]});
        t.push_back({3 * n + k, n + i, d.m[i]});
      }
      break;
    }
    case Formulation::reduced: {
      append_diag(t, d.m, 0, 0);
      append_block(t, prob.L, 0, n, 1.0, true);
      append_block(t, prob.L, n, 0, 1.0);
      const SparseMatrix block = multiply(scale_columns(prob.Mbar, d.minv.cwiseProduct(d.pi_I)),
                                          transpose(prob.Mbar));
      append_block(t, block, n, n, -1.0 / alpha);
      break;
    }
  }
  return SparseMatrix::from_triplets(size_, size_, t);
}

StepVector recover_step(const Vector& dy, const Vector& dp, const SaddleSystem& sys) {
  require(sys.formulation() == Formulation::reduced, "recover_step: system is not reduced");
  const auto& d = *sys.data_;
  const auto& prob = *d.prob;
  const Index n = prob.n();
  require(dy.size() == n && dp.size() == n, "recover_step: dimension mismatch");

  const Vector w = matvec_transpose(prob.Mbar, dp) - d.g_u;
  const Vector gamma_full = d.part.extend_active(d.gamma_mu);

  StepVector s;
  s.dy = dy;
  s.dp = dp;
  s.du = d.minv.cwiseProduct(d.pi_I.cwiseProduct(w)) / prob.alpha - d.minv.cwiseProduct(gamma_full);
  const Vector dmu_a = d.part.restrict_active(d.minv.cwiseProduct(w) +
                                              prob.alpha * d.minv.cwiseProduct(gamma_full));
  s.dmu = d.part.extend_active(dmu_a) + d.dmu_inactive;
  return s;
}

StepVector SaddleSystem::lift(const Vector& solution) const {
  require(solution.size() == size_, "SaddleSystem::lift: dimension mismatch");
  const Index n = data_->prob->n();
  switch (formulation_) {
    case Formulation::full:
      return StepVector::from_stacked(solution);
    case Formulation::augmented: {
      StepVector s;
      s.dy = solution.segment(0, n);
      s.du = solution.segment(n, n);
      s.dp = solution.segment(2 * n, n);
      s.dmu = data_->part.extend_active(solution.segment(3 * n, data_->part.n_active())) +
              data_->dmu_inactive;
      return s;
    }
    case Formulation::reduced:
      return recover_step(solution.segment(0, n), solution.segment(n, n), *this);
  }
  throw ContractViolation("lift: unknown formulation");
}

std::pair<double, double> residual_equivalence_check(const SaddleSystem& full_sys,
                                                     const SaddleSystem& red_sys,
                                                     const Vector& reduced_solution) {
  require(full_sys.formulation() == Formulation::full, "residual_equivalence_check: first system must be full");
  require(red_sys.formulation() == Formulation::reduced, "residual_equivalence_check: second system must be reduced");
  require(full_sys.partition() == red_sys.partition(), "residual_equivalence_check: partitions differ");
  const double r_red = red_sys.residual(reduced_solution).norm();
  const StepVector lifted = red_sys.lift(reduced_solution);
  const double r_full = full_sys.residual(lifted.stacked()).norm();
  return {r_red, r_full};
}

void dump_system(const SaddleSystem& sys, const std::filesystem::path& matrix_path,
                 const std::filesystem::path& rhs_path) {
  require(sys.problem().n() <= 100, "dump_system: only for problems with n <= 100");
  mtx::write_matrix(matrix_path, sys.assemble_matrix());
  mtx::write_vector(rhs_path, sys.rhs());
}

}  // namespace ssn

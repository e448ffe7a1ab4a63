#pragma once

// Newton systems for Theta(x) = 0 at a fixed iterate and partition:
//
//   full       4n unknowns (dy, du, dp, dmu), nonsymmetric;
//   augmented  3n + |A| unknowns (dy, du, dp, dmu_A), symmetric; the inactive
//              multipliers are fixed at +-beta before the solve;
//   reduced    2n unknowns (dy, dp), symmetric; du and dmu_A are recovered
//              in closed form with diagonal solves only.
//
// All operators are apply-only. assemble_matrix() exists for the direct
// inner solver and for dense verification.

#include "ssn/optimality.hpp"

#include <filesystem>
#include <memory>
#include <utility>

namespace ssn {

enum class Formulation { full, augmented, reduced };

const char* to_string(Formulation f);

struct StepVector {
  Vector dy, du, dp, dmu;

  Vector stacked() const;
  static StepVector from_stacked(const Vector& v);
};

class SaddleSystem {
 public:
  Formulation formulation() const { return formulation_; }
  Index size() const { return size_; }
  const Vector& rhs() const { return rhs_; }
  const ActiveSetPartition& partition() const { return data_->part; }
  const ProblemInstance& problem() const { return *data_->prob; }

  /// J v.
  Vector apply(const Vector& v) const;
  LinearMap op() const;
  /// J v - rhs.
  Vector residual(const Vector& v) const { return apply(v) - rhs_; }

  /// Explicit sparse matrix of the operator. The reduced (2,2) block is
  /// formed here and nowhere else.
  SparseMatrix assemble_matrix() const;

  /// Maps a solution of this system to the full Newton step. For the
  /// augmented and reduced forms the inactive multipliers move to +-beta.
  StepVector lift(const Vector& solution) const;

  // Quantities captured at assembly time.
  const Vector& mass() const { return data_->m; }
  const Vector& mass_inv() const { return data_->minv; }
  /// Theta^u + Gamma^u.
  const Vector& g_u() const { return data_->g_u; }
  /// Gamma^mu = P_A M F(u, mu), length |A|.
  const Vector& gamma_mu() const { return data_->gamma_mu; }
  /// (mu_{k+1} - mu_k) on I, zero on A.
  const Vector& dmu_inactive() const { return data_->dmu_inactive; }

 private:
  struct Data {
    const ProblemInstance* prob = nullptr;
    ActiveSetPartition part;
    ResidualBlocks theta;
    Vector m, minv, pi_I;
    Vector g_u, gamma_mu, dmu_inactive;
  };

  friend SaddleSystem assemble_full(const IterateState&, const ActiveSetPartition&,
                                    const ProblemInstance&);
  friend SaddleSystem assemble_augmented(const IterateState&, const ActiveSetPartition&,
                                         const ProblemInstance&);
  friend SaddleSystem assemble_reduced(const IterateState&, const ActiveSetPartition&,
                                       const ProblemInstance&);
  friend StepVector recover_step(const Vector&, const Vector&, const SaddleSystem&);

  static std::shared_ptr<const Data> capture(const IterateState& x,
                                             const ActiveSetPartition& part,
                                             const ProblemInstance& prob);

  Formulation formulation_ = Formulation::full;
  Index size_ = 0;
  Vector rhs_;
  std::shared_ptr<const Data> data_;
};

// The problem must outlive every system assembled from it.
SaddleSystem assemble_full(const IterateState& x, const ActiveSetPartition& part,
                           const ProblemInstance& prob);
SaddleSystem assemble_augmented(const IterateState& x, const ActiveSetPartition& part,
                                const ProblemInstance& prob);
SaddleSystem assemble_reduced(const IterateState& x, const ActiveSetPartition& part,
                              const ProblemInstance& prob);
SaddleSystem assemble(Formulation f, const IterateState& x, const ActiveSetPartition& part,
                      const ProblemInstance& prob);

/// du and dmu from a (possibly inexact) reduced solution (dy, dp):
///   dmu_A = P_A M^{-1} (Mbar^T dp - g_u) + alpha P_A M^{-1} P_A^T Gamma^mu,
///   du    = (1/alpha)(M^{-1} Mbar^T dp - P_A^T dmu_A - M^{-1} g_u),
/// with the second line evaluated in the cancellation-free form
///   du = (1/alpha) M^{-1} Pi_I (Mbar^T dp - g_u) - M^{-1} P_A^T Gamma^mu.
StepVector recover_step(const Vector& dy, const Vector& dp, const SaddleSystem& sys);

/// (|r_red|, |r_full|) where r_full is the full-system residual of the
/// lifted reduced solution. Both systems must come from the same iterate.
std::pair<double, double> residual_equivalence_check(const SaddleSystem& full_sys,
                                                     const SaddleSystem& red_sys,
                                                     const Vector& reduced_solution);

/// Writes the explicit matrix and rhs as .mtx for problems with n <= 100.
void dump_system(const SaddleSystem& sys, const std::filesystem::path& matrix_path,
                 const std::filesystem::path& rhs_path);

}  // namespace ssn

#pragma once

// Active-set Schur complement approximation and the block preconditioners
// for the augmented and reduced Newton systems.
//
//   S     = alpha L M^{-1} L^T + Mbar Pi_I M^{-1} Mbar^T          (exact)
//   S_hat = (sqrt(alpha) L + Mbar Pi_I) M^{-1} (sqrt(alpha) L + Mbar Pi_I)^T
//
// S_hat is applied through one sparse factorization of
// K = sqrt(alpha) L + Mbar Pi_I:  S_hat^{-1} = K^{-T} M K^{-1}.

#include "ssn/linsys.hpp"

#include <memory>

namespace ssn {

class SchurApprox {
 public:
  SchurApprox() = default;

  /// Factorizes K with sparse LU. Throws SingularMatrix when K is singular.
  static SchurApprox build(const ProblemInstance& prob, const ActiveSetPartition& part,
                           double alpha);
  /// Uses a caller-provided solver for K (and K^T), e.g. an approximate one.
  static SchurApprox with_solver(const ProblemInstance& prob, const ActiveSetPartition& part,
                                 double alpha, std::shared_ptr<const InnerSolver> k_solver);

  /// K = sqrt(alpha) L + Mbar Pi_I.
  static SparseMatrix factor_matrix(const ProblemInstance& prob, const ActiveSetPartition& part,
                                    double alpha);

  Index size() const { return m_.size(); }
  double alpha() const { return alpha_; }
  const ActiveSetPartition& partition() const { return part_; }

  /// S_hat v.
  Vector apply(const Vector& v) const;
  /// S_hat^{-1} v.
  Vector apply_inverse(const Vector& v) const;

 private:
  const ProblemInstance* prob_ = nullptr;
  ActiveSetPartition part_;
  double alpha_ = 1.0;
  Vector m_, minv_;
  std::shared_ptr<const InnerSolver> solver_;
};

enum class PrecondKind { bdf_aug, ipf_aug, bdf_red, ipf_red };

const char* to_string(PrecondKind k);
bool is_block_diagonal(PrecondKind k);
Formulation formulation_of(PrecondKind k);

/// Block preconditioner P for an augmented or reduced SaddleSystem.
///
///   bdf_aug: blkdiag(M, alpha M, S_hat_aug)
///   ipf_aug: [I 0; J12 J11^{-1} I] blkdiag(J11, -S_hat_aug) [I J11^{-1} J12^T; 0 I]
///   bdf_red: blkdiag(M, S_hat / alpha)
///   ipf_red: [I 0; L M^{-1} I] blkdiag(M, -S_hat / alpha) [I M^{-1} L^T; 0 I]
///
/// with J11 = blkdiag(M, alpha M), J12 = [L -Mbar; 0 P_A M] and
/// S_hat_aug = (1/alpha) U blkdiag(S_hat, P_A M P_A^T) U^T,
/// U = [I -Mbar Pi_A M^{-1} P_A^T; 0 I].
class Preconditioner {
 public:
  static Preconditioner build(PrecondKind kind, const SaddleSystem& sys);
  static Preconditioner build(PrecondKind kind, const SaddleSystem& sys, SchurApprox schur);

  PrecondKind kind() const { return kind_; }
  Index size() const { return size_; }
  const SchurApprox& schur() const { return schur_; }

  /// P^{-1} v.
  Vector apply_inverse(const Vector& v) const;
  LinearMap inverse_op() const;

  /// S_hat_aug^{-1} on (p, mu_A) blocks; augmented kinds only.
  Vector apply_schur_aug_inverse(const Vector& v) const;

  /// Block-diagonal inverse; requires a bdf kind.
  Vector apply_bdf(const Vector& v) const;
  /// Forward elimination, block-diagonal solve, back substitution; requires
  /// an ipf kind.
  Vector apply_ipf(const Vector& v) const;

 private:
  PrecondKind kind_ = PrecondKind::bdf_red;
  Index size_ = 0;
  SaddleSystem sys_;
  SchurApprox schur_;
};

inline Vector apply_bdf(const Preconditioner& p, const Vector& v) { return p.apply_bdf(v); }
inline Vector apply_ipf(const Preconditioner& p, const Vector& v) { return p.apply_ipf(v); }

}  // namespace ssn

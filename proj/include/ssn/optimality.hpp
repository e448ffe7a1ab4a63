#pragma once

// Discrete optimality system: residual blocks, complementarity function,
// merit function and the five-way active/inactive classification.

#include "ssn/problems.hpp"

#include <optional>
#include <vector>

namespace ssn {

enum class SetLabel : unsigned char { Ab, Aa, A0, Iplus, Iminus };

inline bool is_active(SetLabel s) {
  return s == SetLabel::Ab || s == SetLabel::Aa || s == SetLabel::A0;
}

/// Partition of {0..n-1} into upper-bound active (Ab), lower-bound active
/// (Aa), zero-active (A0) and the inactive sets I+ (mu = beta) and
/// I- (mu = -beta). All lists are sorted.
struct ActiveSetPartition {
  std::vector<SetLabel> label;
  std::vector<Index> Ab, Aa, A0, Iplus, Iminus;
  std::vector<Index> A, I;

  Index n() const { return static_cast<Index>(label.size()); }
  Index n_active() const { return static_cast<Index>(A.size()); }
  Index n_inactive() const { return static_cast<Index>(I.size()); }

  /// Diagonal of Pi_I (1 on inactive indices).
  Vector inactive_mask() const;
  /// Diagonal of Pi_A.
  Vector active_mask() const;
  /// P_A v: gathers the active entries.
  Vector restrict_active(const Vector& v) const;
  /// P_A^T w: scatters |A| values into a length-n vector.
  Vector extend_active(const Vector& w) const;

  static ActiveSetPartition from_labels(std::vector<SetLabel> labels);
  bool operator==(const ActiveSetPartition& other) const { return label == other.label; }
};

struct ResidualBlocks {
  Vector theta_y, theta_u, theta_p, theta_mu;

  /// (theta_y; theta_u; theta_p; theta_mu).
  Vector stacked() const;
  double norm() const;
};

/// Newton iterate x = (y, u, p, mu) with a cached residual. Any component
/// write drops the cache; it is refilled only by residual_Theta.
class IterateState {
 public:
  IterateState() = default;
  IterateState(Vector y, Vector u, Vector p, Vector mu);
  static IterateState zeros(Index n);

  Index n() const { return y_.size(); }
  const Vector& y() const { return y_; }
  const Vector& u() const { return u_; }
  const Vector& p() const { return p_; }
  const Vector& mu() const { return mu_; }

  void set_y(Vector v);
  void set_u(Vector v);
  void set_p(Vector v);
  void set_mu(Vector v);

  bool has_residual() const { return residual_.has_value(); }
  /// Throws ContractViolation when the cache is stale.
  const ResidualBlocks& residual() const;
  /// theta(x) = 0.5 |Theta(x)|^2 from the cache; throws when stale.
  double theta_value() const;

  /// (y; u; p; mu).
  Vector stacked() const;

 private:
  friend const ResidualBlocks& residual_Theta(IterateState& x, const ProblemInstance& prob);

  Vector y_, u_, p_, mu_;
  std::optional<ResidualBlocks> residual_;
  double theta_ = 0.0;
};

/// Index i goes to the first of Ab, Aa, A0, I+, I- whose defining test holds.
ActiveSetPartition classify(const Vector& u, const Vector& mu, const ProblemInstance& prob);

/// Compact form: Pi_A0 u + Pi_Ab (u-b) + Pi_Aa (u-a) - c (Pi_I+ (mu-beta) + Pi_I- (mu+beta)).
Vector complementarity_F(const Vector& u, const Vector& mu, const ActiveSetPartition& part,
                         const ProblemInstance& prob);

/// Theta(x) without touching any cache.
ResidualBlocks evaluate_residual(const IterateState& x, const ProblemInstance& prob);

/// Computes Theta(x), stores it (and theta) in x, and returns the cached blocks.
const ResidualBlocks& residual_Theta(IterateState& x, const ProblemInstance& prob);

/// 0.5 |Theta(x)|^2 from the cached residual. Never recomputes.
double merit(const IterateState& x);

}  // namespace ssn

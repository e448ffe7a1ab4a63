#pragma once

// Globalized inexact semismooth Newton driver with backtracking on the
// merit function 0.5 |Theta|^2.

#include "ssn/krylov.hpp"
#include "ssn/linsys.hpp"
#include "ssn/precond.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ssn {

enum class ForcingMode { exact, eisenstat_walker };
enum class PrecondFamily { bdf, ipf };
enum class InnerSolve { krylov, direct };

const char* to_string(ForcingMode m);
const char* to_string(PrecondFamily p);

struct ForcingOptions {
  ForcingMode mode = ForcingMode::exact;
  double eta_exact = 1e-10;
  double eta0 = 1e-1;
  double eta_max = 1e-1;
  double chi = 0.9;
};

struct IterationRecord;

struct NewtonOptions {
  double sigma = 0.1;
  double gamma = 1e-4;
  double tau = 1e-6;
  Index max_iters = 100;
  Index max_backtracks = 30;
  ForcingOptions forcing;
  Formulation formulation = Formulation::reduced;
  PrecondFamily preconditioner = PrecondFamily::ipf;
  InnerSolve inner = InnerSolve::krylov;
  Index krylov_max = 500;
  /// Called after every accepted step with the new iterate.
  std::function<void(const IterationRecord&, const IterateState&)> observer;

  /// Throws ContractViolation on out-of-range values.
  void validate() const;
  PrecondKind precond_kind() const;
};

struct IterationRecord {
  Index k = 0;
  double merit = 0.0;         // theta(x_k)
  double theta_norm = 0.0;    // |Theta(x_k)|
  double eta = 0.0;
  Index krylov_iterations = 0;
  double inner_residual = 0.0;  // |b - J dx|, absolute
  Index backtracks = 0;
  double step_length = 1.0;
  Index n_active = 0;
  Index n_inactive = 0;
  double pct_zero = 0.0;      // of the accepted iterate x_{k+1}
  double merit_next = 0.0;    // theta(x_{k+1})
  double inner_seconds = 0.0;
};

struct NewtonReport {
  std::vector<IterationRecord> records;
  bool converged = false;
  std::string failure;  // empty unless the run aborted
  Index nli = 0;
  double avg_li = 0.0;
  Index total_li = 0;
  Index total_backtracks = 0;
  double final_theta_norm = 0.0;
  double pct_zero = 0.0;
  double wall_seconds = 0.0;
  double avg_inner_seconds = 0.0;  // CPU column
  double total_seconds = 0.0;      // TCPU column
  std::vector<std::vector<double>> krylov_histories;
};

/// u0 = 0 and (y0, p0, mu0) making the first three residual blocks vanish.
IterateState feasible_start(const ProblemInstance& prob);

/// theta_norms holds |Theta| for all iterates so far, most recent last.
double forcing_term(const std::vector<double>& theta_norms, double prev_eta,
                    const ForcingOptions& opts);

/// Percentage of entries with |u_i| <= 1e-8 max(1, |u|_inf).
double sparsity_percent(const Vector& u);

class NewtonSolver {
 public:
  NewtonSolver(const ProblemInstance& prob, NewtonOptions opts);

  /// Throws LineSearchFailure or KrylovStagnation; report() stays valid.
  IterateState solve();
  IterateState solve(IterateState x0);

  const NewtonReport& report() const { return report_; }

 private:
  const ProblemInstance& prob_;
  NewtonOptions opts_;
  NewtonReport report_;
};

/// Convenience wrapper around NewtonSolver.
std::pair<IterateState, NewtonReport> solve(const ProblemInstance& prob, const NewtonOptions& opts);

void write_report_json(const NewtonReport& r, std::ostream& os);
void write_report_csv(const NewtonReport& r, std::ostream& os);

}  // namespace ssn

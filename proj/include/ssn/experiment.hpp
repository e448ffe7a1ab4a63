#pragma once

// Experiment sweeps driven by a JSON configuration: expansion into sweep
// points, parallel execution, CSV/JSON output, dense diagnostics and
// problem export.

#include "ssn/newton.hpp"
#include "ssn/problems.hpp"
#include "ssn/spectral.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ssn {

enum class PartitionMode { newton, all_active, all_inactive };

struct ExperimentConfig {
  std::string problem;                 // poisson2d | poisson3d | convdiff
  std::vector<int> levels;             // grid from refinement level
  std::vector<Index> sizes;            // or interior points per direction
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<Formulation> formulations{Formulation::reduced};
  std::vector<PrecondFamily> preconditioners{PrecondFamily::ipf};
  ForcingMode forcing_mode = ForcingMode::exact;
  std::vector<double> eta0s{1e-1};     // swept in eisenstat_walker mode
  std::optional<double> eta_max;       // defaults to eta0
  double chi = 0.9;
  double epsilon = 1.0;
  std::optional<double> delta;
  double domain_lo = 0.0, domain_hi = 1.0;
  std::optional<double> bound_a, bound_b;  // problem defaults when unset
  double desired_state_scale = 1.0;    // multiplies the default y_d profile
  double source = 0.0;                 // constant f
  double tau = 1e-6;
  Index max_iters = 100;
  Index krylov_max = 500;
  std::string output = "results";
  bool dense_diagnostics = false;
  Index dense_threshold = kDefaultDenseThreshold;
  PartitionMode partition = PartitionMode::newton;

  /// Throws ConfigError naming the offending field (or the parse position).
  static ExperimentConfig parse(const std::string& json_text);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  void validate() const;
};

struct SweepPoint {
  Index order = 0;  // position in the sweep; the merge key
  GridSpec grid;
  double alpha = 0.0;
  double beta = 0.0;
  Formulation formulation = Formulation::reduced;
  PrecondFamily preconditioner = PrecondFamily::ipf;
  ForcingOptions forcing;

  /// File-name friendly identifier.
  std::string key(const std::string& problem) const;
};

std::vector<SweepPoint> expand(const ExperimentConfig& cfg);
ProblemInstance build_problem(const ExperimentConfig& cfg, const SweepPoint& pt);
NewtonOptions newton_options(const ExperimentConfig& cfg, const SweepPoint& pt);

struct RunResult {
  SweepPoint point;
  Index n = 0;
  NewtonReport report;
  bool converged = false;
  std::string error;
};

/// Runs every sweep point on `jobs` worker threads; results come back in
/// sweep order regardless of completion order.
std::vector<RunResult> run_sweep(const ExperimentConfig& cfg, int jobs = 1);

/// problem,form,precond,level,n,log10_alpha,beta,LI,NLI,BT,pct_u0,CPU,TCPU
void write_results_csv(const ExperimentConfig& cfg, const std::vector<RunResult>& rows,
                       std::ostream& os);

/// The CLI commands. Return the process exit code: 0 success, 1 when a run
/// did not converge, 2 for configuration or size-threshold errors.
int run_command(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs,
                std::ostream& log);
int diagnose_command(const ExperimentConfig& cfg, const std::filesystem::path& out,
                     std::ostream& log);
int export_command(const ExperimentConfig& cfg, const std::filesystem::path& out,
                   std::ostream& log);

}  // namespace ssn

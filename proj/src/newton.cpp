#include "ssn/newton.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace ssn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

IterateState moved(const IterateState& x, const StepVector& dx, double rho) {
  return IterateState(x.y() + rho * dx.dy, x.u() + rho * dx.du, x.p() + rho * dx.dp,
                      x.mu() + rho * dx.dmu);
}

}  // namespace

const char* to_string(ForcingMode m) {
  return m == ForcingMode::exact ? "exact" : "eisenstat_walker";
}

const char* to_string(PrecondFamily p) { return p == PrecondFamily::bdf ? "bdf" : "ipf"; }

void NewtonOptions::validate() const {
  require(sigma > 0.0 && sigma <= 1.0, "NewtonOptions: sigma must lie in (0, 1]");
  require(gamma > 0.0 && gamma < 1.0, "NewtonOptions: gamma must lie in (0, 1)");
  require(tau > 0.0, "NewtonOptions: tau must be positive");
  require(max_iters >= 0, "NewtonOptions: max_iters must be nonnegative");
  require(max_backtracks >= 0, "NewtonOptions: max_backtracks must be nonnegative");
  require(krylov_max > 0, "NewtonOptions: krylov_max must be positive");
  require(formulation != Formulation::full,
          "NewtonOptions: formulation must be augmented or reduced");
  if (forcing.mode == ForcingMode::exact) {
    require(forcing.eta_exact > 0.0 && forcing.eta_exact < 1.0,
            "NewtonOptions: exact forcing value must lie in (0, 1)");
  } else {
    require(forcing.eta0 > 0.0 && forcing.eta0 < 1.0, "NewtonOptions: eta0 must lie in (0, 1)");
    require(forcing.eta_max > 0.0 && forcing.eta_max < 1.0,
            "NewtonOptions: eta_max must lie in (0, 1)");
    require(forcing.chi > 0.0 && forcing.chi <= 1.0, "NewtonOptions: chi must lie in (0, 1]");
  }
}

PrecondKind NewtonOptions::precond_kind() const {
  const bool aug = formulation == Formulation::augmented;
  if (preconditioner == PrecondFamily::bdf) return aug ? PrecondKind::bdf_aug : PrecondKind::bdf_red;
  return aug ? PrecondKind::ipf_aug : PrecondKind::ipf_red;
}

IterateState feasible_start(const ProblemInstance& prob) {
  prob.validate();
  const Index n = prob.n();
  const Vector m = prob.mass();
  const Factorization lu = factorize(prob.L, FactorKind::lu);
  const Vector u0 = Vector::Zero(n);
  Vector y0 = lu.solve(prob.f + matvec(prob.Mbar, u0));
  Vector p0 = lu.solve_transpose(-m.cwiseProduct(y0 - prob.y_d));
  Vector mu0 = (matvec_transpose(prob.Mbar, p0) - prob.alpha * m.cwiseProduct(u0)).cwiseQuotient(m);
  return IterateState(std::move(y0), u0, std::move(p0), std::move(mu0));
}

double forcing_term(const std::vector<double>& theta_norms, double prev_eta,
                    const ForcingOptions& opts) {
  require(!theta_norms.empty(), "forcing_term: no residual norms recorded");
  if (opts.mode == ForcingMode::exact) return opts.eta_exact;
  if (theta_norms.size() < 2) return opts.eta0;
  const double prev_norm = theta_norms[theta_norms.size() - 2];
  const double ratio = prev_norm > 0.0 ? theta_norms.back() / prev_norm : 0.0;
  double eta = opts.chi * ratio * ratio;
  const double safeguard = opts.chi * prev_eta * prev_eta;
  if (safeguard > 0.1) eta = std::max(eta, safeguard);
  return std::min(eta, opts.eta_max);
}

double sparsity_percent(const Vector& u) {
  if (u.size() == 0) return 0.0;
  const double thresh = 1e-8 * std::max(1.0, u.lpNorm<Eigen::Infinity>());
  const auto zeros = (u.array().abs() <= thresh).count();
  return 100.0 * static_cast<double>(zeros) / static_cast<double>(u.size());
}

NewtonSolver::NewtonSolver(const ProblemInstance& prob, NewtonOptions opts)
    : prob_(prob), opts_(std::move(opts)) {
  prob_.validate();
  opts_.validate();
}

IterateState NewtonSolver::solve() { return solve(feasible_start(prob_)); }

IterateState NewtonSolver::solve(IterateState x) {
  require(x.n() == prob_.n(), "NewtonSolver::solve: start iterate has wrong size");
  report_ = NewtonReport{};
  const auto t_start = Clock::now();
  double inner_total = 0.0;

  auto finalize = [&](const IterateState& cur) {
    auto& r = report_;
    r.nli = static_cast<Index>(r.records.size());
    r.total_li = 0;
    r.total_backtracks = 0;
    for (const auto& rec : r.records) {
      r.total_li += rec.krylov_iterations;
      r.total_backtracks += rec.backtracks;
    }
    r.avg_li = r.nli ? static_cast<double>(r.total_li) / static_cast<double>(r.nli) : 0.0;
    r.pct_zero = sparsity_percent(cur.u());
    r.wall_seconds = seconds_since(t_start);
    r.total_seconds = r.wall_seconds;
    r.avg_inner_seconds = r.nli ? inner_total / static_cast<double>(r.nli) : 0.0;
  };

  residual_Theta(x, prob_);
  std::vector<double> norms{std::sqrt(2.0 * merit(x))};
  report_.final_theta_norm = norms.back();
  double prev_eta = 0.0;
  const PrecondKind kind = opts_.precond_kind();

  for (Index k = 0; norms.back() > opts_.tau; ++k) {
    if (k == opts_.max_iters) {
      report_.failure = "maximum number of nonlinear iterations reached";
      finalize(x);
      return x;
    }
    IterationRecord rec;
    rec.k = k;
    rec.merit = merit(x);
    rec.theta_norm = norms.back();
    rec.eta = forcing_term(norms, prev_eta, opts_.forcing);

    const ActiveSetPartition part = classify(x.u(), x.mu(), prob_);
    rec.n_active = part.n_active();
    rec.n_inactive = part.n_inactive();
    const SaddleSystem sys = assemble(opts_.formulation, x, part, prob_);
    const Vector& rhs = sys.rhs();
    const double abs_target = rec.eta * rec.theta_norm;

    const auto t_inner = Clock::now();
    Vector sol;
    if (opts_.inner == InnerSolve::direct) {
      sol = factorize(sys.assemble_matrix(), FactorKind::lu).solve(rhs);
      rec.inner_residual = sys.residual(sol).norm();
    } else {
      const Preconditioner P = Preconditioner::build(kind, sys);
      const double bnorm = rhs.norm();
      const double tol_rel = bnorm > 0.0 ? abs_target / bnorm : 1.0;
      KrylovResult res = is_block_diagonal(kind)
                             ? minres(sys.op(), P.inverse_op(), rhs, tol_rel, opts_.krylov_max)
                             : gmres(sys.op(), P.inverse_op(), rhs, tol_rel, opts_.krylov_max);
      sol = std::move(res.first);
      rec.krylov_iterations = res.second.iterations;
      rec.inner_residual = res.second.final_relative_residual * bnorm;
      report_.krylov_histories.push_back(res.second.residual_history);
      if (!res.second.converged) {
        rec.inner_seconds = seconds_since(t_inner);
        inner_total += rec.inner_seconds;
        report_.records.push_back(rec);
        report_.failure = "inner solver did not reach the forcing tolerance at iteration " +
                          std::to_string(k) + " (" +
                          res.second.breakdown.value_or("unknown reason") + ")";
        finalize(x);
        throw KrylovStagnation(report_.failure);
      }
    }
    rec.inner_seconds = seconds_since(t_inner);
    inner_total += rec.inner_seconds;

    const StepVector dx = sys.lift(sol);
    const double theta_k = rec.merit;
    double rho = 1.0;
    IterateState trial = moved(x, dx, rho);
    residual_Theta(trial, prob_);
    Index bt = 0;
    while (merit(trial) - theta_k > -2.0 * opts_.sigma * opts_.gamma * rho * theta_k) {
      if (bt == opts_.max_backtracks) {
        report_.records.push_back(rec);
        report_.failure = "line search failed after " + std::to_string(bt) +
                          " step halvings at iteration " + std::to_string(k);
        finalize(x);
        throw LineSearchFailure(report_.failure);
      }
      ++bt;
      rho *= 0.5;
      trial = moved(x, dx, rho);
      residual_Theta(trial, prob_);
    }
    rec.backtracks = bt;
    rec.step_length = rho;
    rec.merit_next = merit(trial);
    rec.pct_zero = sparsity_percent(trial.u());
    report_.records.push_back(rec);

    x = std::move(trial);
    norms.push_back(std::sqrt(2.0 * merit(x)));
    report_.final_theta_norm = norms.back();
    prev_eta = rec.eta;
    if (opts_.observer) opts_.observer(rec, x);
  }

  report_.converged = true;
  finalize(x);
  return x;
}

std::pair<IterateState, NewtonReport> solve(const ProblemInstance& prob, const NewtonOptions& opts) {
  NewtonSolver s(prob, opts);
  IterateState x = s.solve();
  return {std::move(x), s.report()};
}

void write_report_json(const NewtonReport& r, std::ostream& os) {
  nlohmann::json j;
  j["converged"] = r.converged;
  j["failure"] = r.failure;
  j["NLI"] = r.nli;
  j["LI"] = r.avg_li;
  j["total_LI"] = r.total_li;
  j["BT"] = r.total_backtracks;
  j["pct_u0"] = r.pct_zero;
  j["final_theta_norm"] = r.final_theta_norm;
  j["wall_seconds"] = r.wall_seconds;
  j["CPU"] = r.avg_inner_seconds;
  j["TCPU"] = r.total_seconds;
  auto& its = j["iterations"] = nlohmann::json::array();
  for (const auto& rec : r.records) {
    its.push_back({{"k", rec.k},
                   {"merit", rec.merit},
                   {"theta_norm", rec.theta_norm},
                   {"eta", rec.eta},
                   {"krylov_iterations", rec.krylov_iterations},
                   {"inner_residual", rec.inner_residual},
                   {"backtracks", rec.backtracks},
                   {"step_length", rec.step_length},
                   {"n_active", rec.n_active},
                   {"n_inactive", rec.n_inactive},
                   {"pct_u0", rec.pct_zero},
                   {"merit_next", rec.merit_next},
                   {"inner_seconds", rec.inner_seconds}});
  }
  j["krylov_residual_histories"] = r.krylov_histories;
  os << j.dump(2) << '\n';
}

void write_report_csv(const NewtonReport& r, std::ostream& os) {
  os << "k,merit,theta_norm,eta,krylov_iterations,inner_residual,backtracks,step_length,"
        "n_active,n_inactive,pct_u0,merit_next,inner_seconds\n";
  const auto old_prec = os.precision(17);
  for (const auto& rec : r.records) {
    os << rec.k << ',' << rec.merit << ',' << rec.theta_norm << ',' << rec.eta << ','
       << rec.krylov_iterations << ',' << rec.inner_residual << ',' << rec.backtracks << ','
       << rec.step_length << ',' << rec.n_active << ',' << rec.n_inactive << ',' << rec.pct_zero
       << ',' << rec.merit_next << ',' << rec.inner_seconds << '\n';
  }
  os << "# NLI=" << r.nli << ",LI=" << r.avg_li << ",BT=" << r.total_backtracks
     << ",pct_u0=" << r.pct_zero << ",converged=" << (r.converged ? 1 : 0) << '\n';
  os.precision(old_prec);
}

}  // namespace ssn

#include "ssn/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace ssn {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) field_error(field, "expected a number");
  return j.get<double>();
}

Index get_count(const json& j, const std::string& field) {
  if (!j.is_number_integer()) field_error(field, "expected an integer");
  return j.get<Index>();
}

std::vector<double> get_number_list(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) field_error(field, "expected a number or a list of numbers");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(get_number(e, field));
  return out;
}

std::vector<std::string> get_string_list(const json& j, const std::string& field) {
  if (j.is_string()) return {j.get<std::string>()};
  if (!j.is_array()) field_error(field, "expected a string or a list of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) field_error(field, "expected strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::pair<double, double> get_pair(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) field_error(field, "expected a list of two numbers");
  return {get_number(j[0], field), get_number(j[1], field)};
}

Formulation parse_formulation(const std::string& s) {
  if (s == "reduced") return Formulation::reduced;
  if (s == "augmented") return Formulation::augmented;
  field_error("formulations", "unknown formulation '" + s + "' (reduced, augmented)");
}

PrecondFamily parse_precond(const std::string& s) {
  if (s == "ipf") return PrecondFamily::ipf;
  if (s == "bdf") return PrecondFamily::bdf;
  field_error("preconditioners", "unknown preconditioner '" + s + "' (ipf, bdf)");
}

int dimension_of(const std::string& problem) { return problem == "poisson3d" ? 3 : 2; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0e", v);
  return buf;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

std::string precond_name(const SweepPoint& pt) {
  return to_string(pt.preconditioner);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::set<std::string> known{
      "problem", "levels", "sizes", "alphas", "beta", "betas", "formulations",
      "preconditioners", "forcing", "epsilon", "delta", "domain", "bounds", "tau",
      "max_iters", "krylov_max", "output", "dense_diagnostics", "dense_threshold", "partition",
      "desired_state_scale", "source"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) field_error(k, "unknown field");

  ExperimentConfig c;
  if (!j.contains("problem") || !j["problem"].is_string())
    field_error("problem", "required string (poisson2d, poisson3d, convdiff)");
  c.problem = j["problem"].get<std::string>();
  if (j.contains("levels"))
    for (double v : get_number_list(j["levels"], "levels")) {
      if (v != std::floor(v)) field_error("levels", "levels must be integers");
      c.levels.push_back(static_cast<int>(v));
    }
  if (j.contains("sizes"))
    for (double v : get_number_list(j["sizes"], "sizes")) {
      if (v != std::floor(v)) field_error("sizes", "sizes must be integers");
      c.sizes.push_back(static_cast<Index>(v));
    }
  if (j.contains("alphas")) c.alphas = get_number_list(j["alphas"], "alphas");
  if (j.contains("beta") && j.contains("betas"))
    field_error("betas", "give either 'beta' or 'betas', not both");
  if (j.contains("beta")) c.betas = {get_number(j["beta"], "beta")};
  if (j.contains("betas")) c.betas = get_number_list(j["betas"], "betas");
  if (j.contains("formulations")) {
    c.formulations.clear();
    for (const auto& s : get_string_list(j["formulations"], "formulations"))
      c.formulations.push_back(parse_formulation(s));
  }
  if (j.contains("preconditioners")) {
    c.preconditioners.clear();
    for (const auto& s : get_string_list(j["preconditioners"], "preconditioners"))
      c.preconditioners.push_back(parse_precond(s));
  }
  if (j.contains("forcing")) {
    const json& f = j["forcing"];
    if (!f.is_object()) field_error("forcing", "expected an object");
    for (const auto& [k, v] : f.items()) {
      if (k == "mode") {
        if (!v.is_string()) field_error("forcing.mode", "expected a string");
        const auto m = v.get<std::string>();
        if (m == "exact") c.forcing_mode = ForcingMode::exact;
        else if (m == "eisenstat_walker" || m == "ew") c.forcing_mode = ForcingMode::eisenstat_walker;
        else field_error("forcing.mode", "unknown mode '" + m + "' (exact, eisenstat_walker)");
      } else if (k == "eta0") {
        c.eta0s = get_number_list(v, "forcing.eta0");
      } else if (k == "eta_max") {
        c.eta_max = get_number(v, "forcing.eta_max");
      } else if (k == "chi") {
        c.chi = get_number(v, "forcing.chi");
      } else {
        field_error("forcing." + k, "unknown field");
      }
    }
  }
  if (j.contains("epsilon")) c.epsilon = get_number(j["epsilon"], "epsilon");
  if (j.contains("delta") && !j["delta"].is_null()) c.delta = get_number(j["delta"], "delta");
  if (j.contains("domain")) std::tie(c.domain_lo, c.domain_hi) = get_pair(j["domain"], "domain");
  if (j.contains("bounds")) {
    const auto [a, b] = get_pair(j["bounds"], "bounds");
    c.bound_a = a;
    c.bound_b = b;
  }
  if (j.contains("desired_state_scale"))
    c.desired_state_scale = get_number(j["desired_state_scale"], "desired_state_scale");
  if (j.contains("source")) c.source = get_number(j["source"], "source");
  if (j.contains("tau")) c.tau = get_number(j["tau"], "tau");
  if (j.contains("max_iters")) c.max_iters = get_count(j["max_iters"], "max_iters");
  if (j.contains("krylov_max")) c.krylov_max = get_count(j["krylov_max"], "krylov_max");
  if (j.contains("output")) {
    if (!j["output"].is_string()) field_error("output", "expected a string");
    c.output = j["output"].get<std::string>();
  }
  if (j.contains("dense_diagnostics")) {
    if (!j["dense_diagnostics"].is_boolean()) field_error("dense_diagnostics", "expected a boolean");
    c.dense_diagnostics = j["dense_diagnostics"].get<bool>();
  }
  if (j.contains("dense_threshold"))
    c.dense_threshold = get_count(j["dense_threshold"], "dense_threshold");
  if (j.contains("partition")) {
    if (!j["partition"].is_string()) field_error("partition", "expected a string");
    const auto p = j["partition"].get<std::string>();
    if (p == "newton") c.partition = PartitionMode::newton;
    else if (p == "all_active") c.partition = PartitionMode::all_active;
    else if (p == "all_inactive") c.partition = PartitionMode::all_inactive;
    else field_error("partition", "unknown mode '" + p + "' (newton, all_active, all_inactive)");
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::validate() const {
  if (problem != "poisson2d" && problem != "poisson3d" && problem != "convdiff")
    field_error("problem", "unknown problem '" + problem + "' (poisson2d, poisson3d, convdiff)");
  if (levels.empty() == sizes.empty())
    field_error("levels", "give exactly one nonempty list of 'levels' or 'sizes'");
  for (int l : levels)
    if (l < 2 || l > 12) field_error("levels", "levels must lie in [2, 12]");
  for (Index s : sizes)
    if (s < 2) field_error("sizes", "sizes must be at least 2");
  if (alphas.empty()) field_error("alphas", "must be a nonempty list");
  for (double a : alphas)
    if (!(a > 0.0)) field_error("alphas", "values must be positive");
  if (betas.empty()) field_error("beta", "required (positive number or nonempty list 'betas')");
  for (double b : betas)
    if (!(b > 0.0)) field_error("betas", "values must be positive");
  if (formulations.empty()) field_error("formulations", "must be a nonempty list");
  if (preconditioners.empty()) field_error("preconditioners", "must be a nonempty list");
  if (forcing_mode == ForcingMode::eisenstat_walker) {
    if (eta0s.empty()) field_error("forcing.eta0", "must be a nonempty list");
    for (double e : eta0s)
      if (!(e > 0.0 && e < 1.0)) field_error("forcing.eta0", "values must lie in (0, 1)");
    if (eta_max && !(*eta_max > 0.0 && *eta_max < 1.0))
      field_error("forcing.eta_max", "must lie in (0, 1)");
    if (!(chi > 0.0 && chi <= 1.0)) field_error("forcing.chi", "must lie in (0, 1]");
  }
  if (!(epsilon > 0.0)) field_error("epsilon", "must be positive");
  if (delta && *delta < 0.0) field_error("delta", "must be nonnegative");
  if (!(domain_hi > domain_lo)) field_error("domain", "need lo < hi");
  if (bound_a && !(*bound_a < 0.0 && *bound_b > 0.0)) field_error("bounds", "need a < 0 < b");
  if (!(tau > 0.0)) field_error("tau", "must be positive");
  if (max_iters < 0) field_error("max_iters", "must be nonnegative");
  if (krylov_max <= 0) field_error("krylov_max", "must be positive");
  if (dense_threshold <= 0) field_error("dense_threshold", "must be positive");
  if (output.empty()) field_error("output", "must be a nonempty path");
}

std::string SweepPoint::key(const std::string& problem) const {
  std::string k = problem + "_";
  k += grid.level ? "l" + std::to_string(*grid.level) : "s" + std::to_string(grid.points);
  k += "_a" + sci(alpha) + "_b" + sci(beta) + "_" + to_string(formulation) + "_" +
       to_string(preconditioner);
  if (forcing.mode == ForcingMode::exact) k += "_exact";
  else k += "_ew" + sci(forcing.eta0);
  return k;
}

std::vector<SweepPoint> expand(const ExperimentConfig& cfg) {
  cfg.validate();
  const int dim = dimension_of(cfg.problem);
  std::vector<GridSpec> grids;
  for (int l : cfg.levels) grids.push_back(GridSpec::from_level(dim, l));
  for (Index s : cfg.sizes) grids.push_back(GridSpec::from_points(dim, s));
  std::vector<ForcingOptions> forcings;
  if (cfg.forcing_mode == ForcingMode::exact) {
    forcings.push_back(ForcingOptions{});
  } else {
    for (double e : cfg.eta0s) {
      ForcingOptions f;
      f.mode = ForcingMode::eisenstat_walker;
      f.eta0 = e;
      f.eta_max = cfg.eta_max.value_or(e);
      f.chi = cfg.chi;
      forcings.push_back(f);
    }
  }
  std::vector<SweepPoint> pts;
  for (const auto& g : grids)
    for (double a : cfg.alphas)
      for (double b : cfg.betas)
        for (Formulation f : cfg.formulations)
          for (PrecondFamily p : cfg.preconditioners)
            for (const auto& fo : forcings) {
              SweepPoint pt;
              pt.order = static_cast<Index>(pts.size());
              pt.grid = g;
              pt.alpha = a;
              pt.beta = b;
              pt.formulation = f;
              pt.preconditioner = p;
              pt.forcing = fo;
              pts.push_back(pt);
            }
  return pts;
}

ProblemInstance build_problem(const ExperimentConfig& cfg, const SweepPoint& pt) {
  ProblemInstance prob;
  if (cfg.problem == "convdiff") {
    CDConfig cd;
    cd.epsilon = cfg.epsilon;
    cd.delta = cfg.delta;
    cd.domain_lo = cfg.domain_lo;
    cd.domain_hi = cfg.domain_hi;
    prob = make_convection_diffusion(pt.grid, cd, pt.alpha, pt.beta, cfg.bound_a.value_or(-20.0),
                                     cfg.bound_b.value_or(20.0));
  } else {
    prob = make_poisson(pt.grid, pt.alpha, pt.beta, cfg.bound_a.value_or(-30.0),
                        cfg.bound_b.value_or(30.0));
  }
  if (cfg.desired_state_scale != 1.0) prob.y_d *= cfg.desired_state_scale;
  if (cfg.source != 0.0) prob.f.setConstant(cfg.source);
  return prob;
}

NewtonOptions newton_options(const ExperimentConfig& cfg, const SweepPoint& pt) {
  NewtonOptions o;
  o.tau = cfg.tau;
  o.max_iters = cfg.max_iters;
  o.krylov_max = cfg.krylov_max;
  o.forcing = pt.forcing;
  o.formulation = pt.formulation;
  o.preconditioner = pt.preconditioner;
  return o;
}

std::vector<RunResult> run_sweep(const ExperimentConfig& cfg, int jobs) {
  const auto pts = expand(cfg);
  std::vector<RunResult> out(pts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pts.size(); i = next++) {
      RunResult& r = out[i];
      r.point = pts[i];
      try {
        const ProblemInstance prob = build_problem(cfg, pts[i]);
        r.n = prob.n();
        NewtonSolver solver(prob, newton_options(cfg, pts[i]));
        try {
          solver.solve();
        } catch (const Error& e) {
          r.error = e.what();
        }
        r.report = solver.report();
        r.converged = r.report.converged && r.error.empty();
        if (!r.converged && r.error.empty()) r.error = r.report.failure;
      } catch (const Error& e) {
        r.error = e.what();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(pts.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

void write_results_csv(const ExperimentConfig& cfg, const std::vector<RunResult>& rows,
                       std::ostream& os) {
  os << "problem,form,precond,level,n,log10_alpha,beta,LI,NLI,BT,pct_u0,CPU,TCPU\n";
  for (const auto& r : rows) {
    const auto& pt = r.point;
    os << cfg.problem << ',' << to_string(pt.formulation) << ',' << precond_name(pt) << ','
       << (pt.grid.level ? std::to_string(*pt.grid.level) : std::string()) << ',' << r.n << ','
       << fmt("%.6g", std::log10(pt.alpha)) << ',' << fmt("%.6g", pt.beta) << ','
       << fmt("%.2f", r.report.avg_li) << ',' << r.report.nli << ','
       << r.report.total_backtracks << ',' << fmt("%.2f", r.report.pct_zero) << ','
       << fmt("%.4f", r.report.avg_inner_seconds) << ',' << fmt("%.4f", r.report.total_seconds)
       << '\n';
  }
}

int run_command(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs,
                std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(out / "runs");
  const auto rows = run_sweep(cfg, jobs);
  bool all_ok = true;
  for (const auto& r : rows) {
    const std::string key =
        fmt("%03.0f", static_cast<double>(r.point.order)) + "_" + r.point.key(cfg.problem);
    std::ostringstream rep;
    write_report_json(r.report, rep);
    json j;
    j["problem"] = cfg.problem;
    j["n"] = r.n;
    j["level"] = r.point.grid.level ? json(*r.point.grid.level) : json(nullptr);
    j["points"] = r.point.grid.points;
    j["alpha"] = r.point.alpha;
    j["beta"] = r.point.beta;
    j["formulation"] = to_string(r.point.formulation);
    j["preconditioner"] = precond_name(r.point);
    j["forcing"] = {{"mode", to_string(r.point.forcing.mode)},
                    {"eta0", r.point.forcing.eta0},
                    {"eta_max", r.point.forcing.eta_max},
                    {"chi", r.point.forcing.chi}};
    j["converged"] = r.converged;
    j["error"] = r.error;
    j["report"] = json::parse(rep.str());
    write_text(out / "runs" / (key + ".json"), j.dump(2) + "\n");
    std::ostringstream csv;
    write_report_csv(r.report, csv);
    write_text(out / "runs" / (key + ".csv"), csv.str());

    log << (r.converged ? "ok   " : "FAIL ") << r.point.key(cfg.problem) << " n=" << r.n
        << " NLI=" << r.report.nli << " LI=" << fmt("%.2f", r.report.avg_li)
        << " BT=" << r.report.total_backtracks << " pct_u0=" << fmt("%.2f", r.report.pct_zero);
    if (!r.converged) log << " (" << r.error << ")";
    log << '\n';
    all_ok = all_ok && r.converged;
  }
  std::ostringstream csv;
  write_results_csv(cfg, rows, csv);
  write_text(out / "results.csv", csv.str());
  log << "wrote " << (out / "results.csv").string() << " (" << rows.size() << " rows)\n";
  int code = all_ok ? 0 : 1;
  if (cfg.dense_diagnostics) code = std::max(code, diagnose_command(cfg, out / "diagnose", log));
  return code;
}

int diagnose_command(const ExperimentConfig& cfg, const std::filesystem::path& out,
                     std::ostream& log) {
  namespace fs = std::filesystem;
  const auto pts = expand(cfg);
  for (const auto& pt : pts)
    if (pt.grid.size() > cfg.dense_threshold)
      throw DenseThresholdExceeded("diagnose: n = " + std::to_string(pt.grid.size()) +
                                   " exceeds dense_threshold = " +
                                   std::to_string(cfg.dense_threshold) +
                                   "; choose smaller levels/sizes or raise dense_threshold");
  fs::create_directories(out);
  bool clean = true;
  for (const auto& pt : pts) {
    const ProblemInstance prob = build_problem(cfg, pt);
    std::vector<std::pair<IterateState, ActiveSetPartition>> states;
    const IterateState x0 = feasible_start(prob);
    if (cfg.partition == PartitionMode::newton) {
      NewtonOptions o = newton_options(cfg, pt);
      o.observer = [&](const IterationRecord&, const IterateState& x) {
        states.emplace_back(x, classify(x.u(), x.mu(), prob));
      };
      states.emplace_back(x0, classify(x0.u(), x0.mu(), prob));
      NewtonSolver solver(prob, o);
      try {
        solver.solve(x0);
      } catch (const Error& e) {
        log << "note: " << pt.key(cfg.problem) << " stopped early: " << e.what() << '\n';
      }
      // The last iterate needs no further Newton system.
      if (states.size() > 1) states.pop_back();
    } else {
      const SetLabel lab =
          cfg.partition == PartitionMode::all_active ? SetLabel::A0 : SetLabel::Iplus;
      states.emplace_back(
          x0, ActiveSetPartition::from_labels(std::vector<SetLabel>(prob.n(), lab)));
    }

    const std::string key = pt.key(cfg.problem);
    // one row per Newton iteration in each bounds file
    std::ostringstream bounds, schur_bounds, eigs;
    write_bound_csv_header(bounds);
    write_bound_csv_header(schur_bounds);
    eigs << "iteration,label,index,eigenvalue\n";
    json reports = json::array();
    const PrecondKind kind = newton_options(cfg, pt).precond_kind();
    for (std::size_t k = 0; k < states.size(); ++k) {
      const auto& [x, part] = states[k];
      const BoundReport rs = eig_pencil_S(prob, part, prob.alpha, cfg.dense_threshold);
      const SaddleSystem sys = assemble(pt.formulation, x, part, prob);
      const BoundReport rp =
          eig_preconditioned(sys, Preconditioner::build(kind, sys), cfg.dense_threshold);
      for (const BoundReport* r : {&rs, &rp}) {
        write_bound_csv_row(static_cast<Index>(k), *r, r == &rs ? schur_bounds : bounds);
        for (std::size_t i = 0; i < r->eigenvalues.size(); ++i)
          eigs << k << ',' << r->label << ',' << i << ',' << fmt("%.12g", r->eigenvalues[i])
               << '\n';
        std::ostringstream js;
        write_bound_json(*r, js);
        json jr = json::parse(js.str());
        jr["iteration"] = k;
        reports.push_back(std::move(jr));
        const bool ok = r->violations.empty() && r->unit_count >= r->expected_unit_lower;
        clean = clean && ok;
        if (!ok)
          log << "bound check failed: " << key << " iteration " << k << " " << r->label << '\n';
      }
    }
    write_text(out / (key + "_bounds.csv"), bounds.str());
    write_text(out / (key + "_schur_bounds.csv"), schur_bounds.str());
    write_text(out / (key + "_eigenvalues.csv"), eigs.str());
    write_text(out / (key + "_bounds.json"), reports.dump(2) + "\n");
    log << "diagnosed " << key << ": " << states.size() << " iteration(s)\n";
  }
  return clean ? 0 : 1;
}

int export_command(const ExperimentConfig& cfg, const std::filesystem::path& out,
                   std::ostream& log) {
  std::set<std::string> done;
  for (const auto& pt : expand(cfg)) {
    std::string key = cfg.problem + "_";
    key += pt.grid.level ? "l" + std::to_string(*pt.grid.level) : "s" + std::to_string(pt.grid.points);
    key += "_a" + sci(pt.alpha) + "_b" + sci(pt.beta);
    if (!done.insert(key).second) continue;
    const auto dir = out / key;
    export_problem(build_problem(cfg, pt), dir);
    log << "exported " << dir.string() << '\n';
  }
  return 0;
}

}  // namespace ssn

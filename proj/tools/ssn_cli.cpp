// Command-line front end: run | diagnose | export-problem.

#include "ssn/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Semismooth Newton solver for sparse box-constrained optimal control"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::optional<long> dense_threshold;

  auto* run = app.add_subcommand("run", "Run a parameter sweep and write results.csv");
  run->add_option("config", config_path, "JSON configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides 'output')");
  run->add_option("--jobs", jobs, "Parallel worker threads")->check(CLI::PositiveNumber);

  auto* diag = app.add_subcommand("diagnose", "Dense eigenvalue diagnostics per Newton iteration");
  diag->add_option("config", config_path, "JSON configuration")->required()->check(CLI::ExistingFile);
  diag->add_option("--out", out_dir, "Output directory (default: <output>/diagnose)");
  diag->add_option("--dense-threshold", dense_threshold, "Largest n for dense work");

  auto* exp = app.add_subcommand("export-problem", "Write problem matrices as Matrix Market files");
  exp->add_option("config", config_path, "JSON configuration")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", out_dir, "Output directory (default: <output>/problems)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors share the config-error code
  }

  try {
    ssn::ExperimentConfig cfg = ssn::ExperimentConfig::from_file(config_path);
    if (dense_threshold) {
      cfg.dense_threshold = *dense_threshold;
      cfg.validate();
    }
    const std::filesystem::path base = cfg.output;
    const auto out_or = [&](const std::filesystem::path& fallback) {
      return out_dir.empty() ? fallback : std::filesystem::path(out_dir);
    };
    if (run->parsed())
      return ssn::run_command(cfg, out_or(base), jobs, std::cout);
    if (diag->parsed())
      return ssn::diagnose_command(cfg, out_or(base / "diagnose"), std::cout);
    return ssn::export_command(cfg, out_or(base / "problems"), std::cout);
  } catch (const ssn::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ssn::DenseThresholdExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ssn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

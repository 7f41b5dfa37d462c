#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slt/errors.hpp"
#include "slt/experiment.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kAssertFail = 1;
constexpr int kConfigError = 2;

int run_stage(const std::string& name, const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, unsigned threads) {
  slt::ExperimentConfig config;
  try {
    config = slt::load_config(config_path);
    if (seed) slt::apply_seed_override(config, *seed);
  } catch (const slt::ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  slt::RunOptions options;
  options.out_dir = out_dir;
  options.threads = threads;
  try {
    const auto report = slt::run_experiment(config, slt::parse_stage(name), options);
    for (const auto& a : report.json["assertions"]) {
      std::cout << (a["passed"].get<bool>() ? "ok    " : "FAIL  ") << a["name"].get<std::string>() << "  ("
                << a["module"].get<std::string>() << '/' << a["op"].get<std::string>() << ")\n";
      if (a.contains("witness")) std::cout << "      witness: " << a["witness"].dump() << '\n';
    }
    std::cout << "config " << report.json["config_hash"].get<std::string>() << ": "
              << (report.passed ? "all assertions passed" : "assertion failures") << '\n';
    return report.passed ? kPass : kAssertFail;
  } catch (const slt::ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "pipeline error [" << name << "]: " << e.what() << '\n';
    return kAssertFail;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schrodinger lattice tube decompositions: experiment runner"};
  app.require_subcommand(1);

  std::string out_dir;
  if (const char* env = std::getenv("SLT_OUT_DIR")) out_dir = env;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  app.add_option("--out-dir", out_dir, "Output directory (default: $SLT_OUT_DIR or config output.dir)");
  app.add_option("--seed-override", seed, "Replace every seed in the config");
  app.add_option("--threads", threads, "Worker threads for independent sweep points")->check(CLI::PositiveNumber);

  std::string config_path;
  std::string chosen;
  for (const char* name : {"run", "calibrate", "decompose", "verify", "bilinear", "kakeya"}) {
    auto* sub = app.add_subcommand(name, std::string("Pipeline stage: ") + name);
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->callback([&chosen, name] { chosen = name; });
  }
  std::vector<std::string> graphs;
  auto* fc = app.add_subcommand("flow-check", "Exact layered flow against brute-force conservation");
  fc->add_option("graphs", graphs, "Lattice instance files (JSON)")->required()->check(CLI::ExistingFile);
  fc->callback([&chosen] { chosen = "flow-check"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  if (chosen != "flow-check") return run_stage(chosen, config_path, out_dir, seed, threads);

  try {
    bool all = true;
    for (const auto& r : slt::flow_check(graphs)) {
      std::cout << (r.agrees ? "ok    " : "FAIL  ") << r.path << "  decomposition="
                << (r.feasible ? "feasible" : "infeasible")
                << " brute-force=" << (r.brute_force_feasible ? "feasible" : "infeasible");
      if (r.expected) std::cout << " expected=" << (*r.expected ? "feasible" : "infeasible");
      std::cout << '\n';
      all = all && r.agrees;
    }
    return all ? kPass : kAssertFail;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

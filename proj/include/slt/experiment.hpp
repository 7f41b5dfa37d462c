#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slt/schrodinger.hpp"

namespace slt {

struct EnsembleConfig {
  /// gaussian | random-phase | bump | zero
  std::string profile = "gaussian";
  int count = 1;
  std::uint64_t seed = 1;
  FrequencyWindow window{{0.0, 0.0}, 1.0};
};

struct TauConfig {
  /// fixed | calibrate
  std::string policy = "calibrate";
  double value = 0.0;
  /// Multiplies the calibrated tau.
  double factor = 1.0;
  int random_subsets = 200;
  int time_samples = 8;
};

struct DecompositionConfig {
  double time_range = 1.0;
  /// When set, time_range becomes (layers - 2) tau / 2.
  std::optional<int> layers;
  double threshold = 1e-3;
  double domination_floor = 1e-10;
};

struct BilinearConfig {
  double m_freq = 1.0;
  std::vector<double> n_freqs;
  std::vector<std::uint64_t> seeds;
  double length = 16.0;
  int grid_points = 256;
  /// Window [-R, R] with R = time_scale / N.
  double time_scale = 3.0;
  int panels = 64;
  bool tubes = true;
  double max_trend = 0.10;
};

struct KakeyaConfig {
  std::vector<double> radii;
  int tubes_per_family = 10;
  double delta = 0.1;
  double nu = 0.1;
  double voxel = 0.25;
  std::uint64_t seed = 1;
  double max_slope = 0.5;
};

struct ExperimentConfig {
  int dimension = 1;
  double length = 16.0;
  int grid_points = 64;
  double dilation = 2.0;
  int denominator_log2 = 40;
  EnsembleConfig ensemble;
  TauConfig tau;
  DecompositionConfig decomposition;
  std::optional<BilinearConfig> bilinear;
  std::optional<KakeyaConfig> kakeya;
  std::string output_dir = "out";
  /// Canonical JSON of the validated input.
  nlohmann::json source;
};

/// Throws ConfigurationError naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

void apply_seed_override(ExperimentConfig& config, std::uint64_t seed);

enum class Stage { Calibrate, Decompose, Verify, Bilinear, Kakeya, All };

Stage parse_stage(const std::string& name);

struct RunOptions {
  std::string out_dir;
  unsigned threads = 1;
  bool write_files = true;
};

struct RunReport {
  nlohmann::json json;
  bool passed = true;
  /// Deterministic CSV tables keyed by file name.
  std::vector<std::pair<std::string, std::string>> tables;
};

/// Runs every stage up to and including `stage` (all sections for All).
RunReport run_experiment(const ExperimentConfig& config, Stage stage, const RunOptions& options);

struct FlowCheckResult {
  std::string path;
  bool feasible = false;
  bool brute_force_feasible = false;
  std::optional<bool> expected;
  bool agrees = false;
};

/// Exact decomposition against brute-force conservation on each file.
std::vector<FlowCheckResult> flow_check(const std::vector<std::string>& paths);

}  // namespace slt

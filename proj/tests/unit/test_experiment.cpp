#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "slt/errors.hpp"
#include "slt/exact.hpp"
#include "slt/experiment.hpp"

using namespace slt;
using nlohmann::json;

namespace {

json smoke() {
  std::ifstream in(std::string(SLT_SOURCE_DIR) + "/configs/smoke.json");
  return json::parse(in);
}

}  // namespace

TEST_CASE("the bundled smoke config parses") {
  const auto c = config_from_json(smoke());
  CHECK(c.dimension == 1);
  CHECK(c.grid_points == 64);
  CHECK(c.decomposition.layers == 4);
  CHECK(config_hash(c).size() == 16);
  CHECK(config_hash(c) == config_hash(config_from_json(smoke())));
}

TEST_CASE("schema violations name the offending key") {
  auto missing = smoke();
  missing["grid"].erase("M");
  CHECK_THROWS_WITH_AS(config_from_json(missing), doctest::Contains("'M'"), ConfigurationError);
  auto unknown = smoke();
  unknown["kernal"] = json::object();
  CHECK_THROWS_WITH_AS(config_from_json(unknown), doctest::Contains("kernal"), ConfigurationError);
  auto typed = smoke();
  typed["ensemble"]["count"] = "three";
  CHECK_THROWS_AS(config_from_json(typed), ConfigurationError);
  auto empty = smoke();
  empty["kakeya"]["R"] = json::array();
  CHECK_THROWS_AS(config_from_json(empty), ConfigurationError);
  auto unresolvable = smoke();
  unresolvable["ensemble"]["window"]["radius"] = 20.0;
  CHECK_THROWS_AS(config_from_json(unresolvable), ConfigurationError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigurationError);
}

TEST_CASE("seed override changes the hash") {
  auto c = config_from_json(smoke());
  const auto before = config_hash(c);
  apply_seed_override(c, 99);
  CHECK(c.ensemble.seed == 99);
  CHECK(c.kakeya->seed == 99);
  CHECK(config_hash(c) != before);
}

TEST_CASE("runs are deterministic across thread counts") {
  const auto c = config_from_json(smoke());
  const auto a = run_experiment(c, Stage::All, {"", 1, false});
  const auto b = run_experiment(c, Stage::All, {"", 3, false});
  CHECK(a.passed);
  CHECK(a.json == b.json);
  CHECK(a.tables == b.tables);
  CHECK(a.json["calibration"]["tau"].get<double>() > 0.0);
}

TEST_CASE("stages run only what they need") {
  const auto c = config_from_json(smoke());
  const auto cal = run_experiment(c, Stage::Calibrate, {"", 1, false});
  CHECK(cal.json.contains("calibration"));
  CHECK_FALSE(cal.json.contains("decomposition"));
  const auto kak = run_experiment(c, Stage::Kakeya, {"", 1, false});
  CHECK(kak.json.contains("kakeya"));
  CHECK_FALSE(kak.json.contains("calibration"));
  CHECK_THROWS_AS(parse_stage("dance"), ConfigurationError);
}

TEST_CASE("zero field verify passes vacuously") {
  auto j = smoke();
  j["ensemble"]["profile"] = "zero";
  j.erase("kakeya");
  const auto r = run_experiment(config_from_json(j), Stage::Verify, {"", 1, false});
  CHECK(r.passed);
  CHECK(r.json["decomposition"]["fields"][0]["vacuous"] == true);
}

TEST_CASE("oversized tau reports infeasibility with a witness cut") {
  auto j = smoke();
  j["tau"]["factor"] = 4;
  j["decomposition"] = {{"R_time", 8}};
  const auto r = run_experiment(config_from_json(j), Stage::Decompose, {"", 1, false});
  CHECK_FALSE(r.passed);
  bool witnessed = false;
  for (const auto& a : r.json["assertions"]) {
    if (a["op"] == "decompose" && !a["passed"].get<bool>()) {
      witnessed = a["witness"]["lhs"].get<Numerator>() > a["witness"]["rhs"].get<Numerator>() &&
                  !a["witness"]["set"].empty();
    }
  }
  CHECK(witnessed);
}

TEST_CASE("files are written to the output directory") {
  const auto dir = std::filesystem::temp_directory_path() / "slt_experiment_test";
  std::filesystem::remove_all(dir);
  run_experiment(config_from_json(smoke()), Stage::All, {dir.string(), 1, true});
  for (const char* f : {"report.json", "timing.json", "fields.csv", "kakeya.csv", "decomposition.json", "tubes.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("flow check reproduces the fixture verdicts") {
  std::vector<std::string> paths;
  for (const auto& e : std::filesystem::directory_iterator(std::string(SLT_SOURCE_DIR) + "/tests/fixtures")) {
    if (e.path().extension() == ".json") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  REQUIRE(paths.size() >= 6);
  for (const auto& r : flow_check(paths)) {
    CHECK_MESSAGE(r.agrees, r.path);
    REQUIRE(r.expected.has_value());
    CHECK(*r.expected == r.brute_force_feasible);
  }
}

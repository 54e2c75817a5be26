#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "rdspec/errors.hpp"
#include "rdspec/experiments.hpp"
#include "rdspec/presets.hpp"
#include "rdspec/system_json.hpp"

using namespace rdspec;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rdspec_unit_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

ExperimentConfig config_for(const std::string& experiment, const RandomSystem& sys,
                            const fs::path& out, json params = json::object()) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.system = to_json(sys);
  cfg.parameters = std::move(params);
  cfg.output_dir = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("shipped configs match the presets") {
  const fs::path dir = RDSPEC_CONFIGS;
  CHECK(to_json(load_system(dir / "doubling.json")) == to_json(doubling_system()));
  CHECK(to_json(load_system(dir / "trap.json")) == to_json(trap_system()));
  CHECK(to_json(load_system(dir / "mixed.json")) == to_json(mixed_system()));
}

TEST_CASE("experiment config parsing") {
  const json sys = to_json(doubling_system());
  CHECK(parse_experiment_config(sys).experiment.empty());
  const ExperimentConfig full = parse_experiment_config(
      {{"system", sys}, {"experiment", "returns"}, {"parameters", {{"n", 50}}}, {"master_seed", 7}});
  CHECK(full.experiment == "returns");
  CHECK(full.parameters["n"] == 50);
  CHECK(*full.master_seed == 7);

  auto message = [](const json& j) {
    try {
      parse_experiment_config(j);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message({{"system", sys}, {"experiment", "nope"}}).rfind("experiment:", 0) == 0);
  CHECK(message({{"system", sys}, {"extra", 1}}).rfind("extra:", 0) == 0);
  CHECK(message({{"system", sys}, {"parameters", 3}}).rfind("parameters:", 0) == 0);
  CHECK(message({{"system", sys}, {"master_seed", -1}}).rfind("master_seed:", 0) == 0);
  json broken = sys;
  broken["fibers"][0].erase("sigma");
  CHECK(message(broken) == "system.fibers[0].sigma: missing required field");
  CHECK(experiment_names().size() == 12);
}

TEST_CASE("run_experiment") {
  const fs::path out = scratch("validate");
  const RunManifest m = run_experiment(config_for("validate", doubling_system(), out));
  CHECK(m.passed());
  CHECK(m.summary["valid"] == true);
  CHECK(first_line(out / "validation.csv") == "hypothesis,holds,value,witness");
  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK_FALSE(manifest.contains("wall_time_seconds"));
  for (const auto& f : manifest["files"]) CHECK(fs::file_size(out / f["file"].get<std::string>()) > 0);

  SUBCASE("parameter errors name the field") {
    try {
      run_experiment(config_for("returns", doubling_system(), scratch("bad"), {{"n", -3}}));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).rfind("parameters.n:", 0) == 0);
    }
    CHECK_THROWS_AS(run_experiment(config_for("returns", doubling_system(), scratch("bad"),
                                              {{"horizon", 3}})),
                    ConfigError);
    CHECK_THROWS_AS(run_experiment(config_for("unknown", doubling_system(), scratch("bad"))),
                    ConfigError);
  }
  SUBCASE("spec-stats schema and series") {
    const fs::path dir = scratch("spec");
    const RunManifest s = run_experiment(config_for(
        "spec-stats", mixed_system(), dir, {{"samples", 10}, {"n_schedule", {50, 100}}}));
    CHECK(s.passed());
    CHECK(first_line(dir / "spec_stats.csv") ==
          "n,eps,samples,median_K_over_n,p90_K_over_n,failure_rate");
    const auto series = emit_plot_series(dir / "manifest.json");
    REQUIRE(series.size() == 1);
    CHECK(first_line(series[0]) == "# n median_K_over_n");
    fs::remove(dir / "spec_stats.csv");
    CHECK_THROWS_AS(emit_plot_series(dir / "manifest.json"), ConfigError);
  }
  SUBCASE("series needs a nonempty manifest") {
    const fs::path dir = scratch("empty");
    fs::create_directories(dir);
    std::ofstream(dir / "manifest.json") << R"({"experiment": "bad-set", "files": []})";
    CHECK_THROWS_AS(emit_plot_series(dir / "manifest.json"), ConfigError);
  }
  SUBCASE("bad-set series carries the fitted slope") {
    const fs::path dir = scratch("badset");
    run_experiment(config_for("bad-set", trap_system(), dir,
                              {{"N", 12}, {"grid", 1000}, {"w_samples", 2}}));
    const auto series = emit_plot_series(dir / "manifest.json");
    std::ifstream in(series.at(0));
    std::string header, slope;
    std::getline(in, header);
    std::getline(in, slope);
    CHECK(slope.rfind("# slope ", 0) == 0);
  }
  SUBCASE("wall time only on request") {
    RunOptions timed;
    timed.record_time = true;
    const fs::path dir = scratch("timed");
    run_experiment(config_for("validate", doubling_system(), dir), timed);
    CHECK(json::parse(slurp(dir / "manifest.json")).contains("wall_time_seconds"));
  }
}

TEST_CASE("outputs do not depend on the worker count") {
  const json params{{"samples", 6}, {"n", 60}};
  RunOptions one, many;
  many.jobs = 5;
  const fs::path a = scratch("jobs1"), b = scratch("jobs5");
  run_experiment(config_for("returns", mixed_system(), a, params), one);
  run_experiment(config_for("returns", mixed_system(), b, params), many);
  CHECK(slurp(a / "returns.csv") == slurp(b / "returns.csv"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
}

// rdspec: batch experiment runner.
//
//   rdspec <experiment> --config <path> [--seed <u64>] [--out <dir>] [--jobs <n>]
//                       [--param key=<json>]... [--record-time]
//   rdspec series --manifest <out>/manifest.json
//   rdspec list
//
// Exit codes: 0 success, 2 config error, 3 assertion failure, 4 numerical failure.

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rdspec/errors.hpp"
#include "rdspec/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAssertion = 3;
constexpr int kExitNumerical = 4;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = 1;
  std::vector<std::string> params;
  bool record_time = false;
};

void apply_params(rdspec::ExperimentConfig& cfg, const std::vector<std::string>& params) {
  for (const std::string& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw rdspec::ConfigError("--param " + p + ": expected key=value");
    }
    const std::string key = p.substr(0, eq);
    const std::string text = p.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      value = text;  // bare strings need no quotes
    }
    cfg.parameters[key] = value;
  }
}

int run(const std::string& experiment, const RunArgs& args) {
  rdspec::ExperimentConfig cfg = rdspec::load_experiment_config(args.config);
  if (!cfg.experiment.empty() && cfg.experiment != experiment) {
    throw rdspec::ConfigError("experiment: config names '" + cfg.experiment +
                              "' but the command is '" + experiment + "'");
  }
  cfg.experiment = experiment;
  if (args.seed) cfg.master_seed = args.seed;
  if (!args.out.empty()) cfg.output_dir = args.out;
  apply_params(cfg, args.params);

  rdspec::RunOptions options;
  options.jobs = args.jobs;
  options.record_time = args.record_time;
  const rdspec::RunManifest m = rdspec::run_experiment(cfg, options);
  if (!m.passed()) {
    std::cerr << "rdspec " << experiment << ": " << m.assertion_failures.size()
              << " assertion failure(s)\n";
    for (const std::string& f : m.assertion_failures) std::cerr << "  " << f << '\n';
    return kExitAssertion;
  }
  std::cout << "rdspec " << experiment << ": ok (" << m.files.size() << " table(s), hash "
            << m.config_hash << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random dynamical systems experiments"};
  app.require_subcommand(1);

  RunArgs args;
  std::string chosen;
  for (const std::string& name : rdspec::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    sub->add_option("--config", args.config, "System or experiment config (JSON)")->required();
    sub->add_option("--seed", args.seed, "Master seed override");
    sub->add_option("--out", args.out, "Output directory");
    sub->add_option("--jobs", args.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--param", args.params, "Experiment parameter key=value (value is JSON)");
    sub->add_flag("--record-time", args.record_time, "Record wall time in the manifest");
    sub->callback([&chosen, name] { chosen = name; });
  }
  std::string manifest;
  CLI::App* series = app.add_subcommand("series", "Write plot series from a run manifest");
  series->add_option("--manifest", manifest, "manifest.json of a finished run")->required();
  series->callback([&chosen] { chosen = "series"; });
  CLI::App* list = app.add_subcommand("list", "List experiment names");
  list->callback([&chosen] { chosen = "list"; });

  if (argc > 1 && argv[1][0] != '-') {
    const std::string first = argv[1];
    const auto& names = rdspec::experiment_names();
    if (first != "series" && first != "list" &&
        std::find(names.begin(), names.end(), first) == names.end()) {
      std::cerr << "config error: experiment: unknown experiment '" << first
                << "' (see rdspec list)\n";
      return kExitConfig;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (chosen == "list") {
      for (const std::string& name : rdspec::experiment_names()) std::cout << name << '\n';
      return 0;
    }
    if (chosen == "series") {
      for (const auto& path : rdspec::emit_plot_series(manifest)) std::cout << path.string() << '\n';
      return 0;
    }
    return run(chosen, args);
  } catch (const rdspec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const rdspec::AssertionFailure& e) {
    std::cerr << "assertion failure: " << e.what() << '\n';
    return kExitAssertion;
  } catch (const rdspec::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const rdspec::PreconditionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

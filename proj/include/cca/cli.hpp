#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cca/baseline.hpp"
#include "cca/bridge.hpp"
#include "cca/error.hpp"
#include "cca/evolve.hpp"
#include "cca/metrics.hpp"
#include "cca/scene.hpp"
#include "cca/synthsim.hpp"
#include "cca/texture.hpp"

namespace cca::cli {

struct RunConfig {
  std::string command = "attack";  // attack | enhance | eval | baselines
  std::string scorer = "synth";    // synth | bridge
  std::string endpoint;
  double timeout = 30.0;
  int retry_limit = 2;

  double alpha = 1000.0;
  double sigma = 10.0;
  std::size_t lambda = 20;
  std::size_t iters = 300;
  std::size_t patience = 10;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  std::size_t width = 16;
  std::size_t height = 16;
  std::size_t surface_width = 32;
  std::size_t surface_height = 32;
  double noise = 0.02;
  std::string scene;               // optional synthetic scene JSON
  std::size_t transformations = 0; // training subset size, 0 = whole train split

  std::string out = "cca-out";
  std::string split = "both";
  std::string ours;

  void validate() const {
    if (command != "attack" && command != "enhance" && command != "eval" && command != "baselines")
      throw Error(ErrorKind::config, "unknown command '" + command + "'");
    if (scorer != "synth" && scorer != "bridge") throw Error(ErrorKind::config, "unknown scorer '" + scorer + "'");
    if (scorer == "bridge" && endpoint.empty()) throw Error(ErrorKind::config, "--scorer bridge requires --endpoint");
    if (width < 1 || height < 1) throw Error(ErrorKind::invalid_dimension, "pattern dimensions must be >= 1");
    if (split != "train" && split != "test" && split != "both")
      throw Error(ErrorKind::config, "--split must be train, test or both");
    if (command == "eval" && ours.empty()) throw Error(ErrorKind::config, "eval requires --ours PATH");
    if (out.empty()) throw Error(ErrorKind::config, "--out must not be empty");
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"scorer", c.scorer},
          {"endpoint", c.endpoint},
          {"timeout", c.timeout},
          {"retry_limit", c.retry_limit},
          {"alpha", c.alpha},
          {"sigma", c.sigma},
          {"lambda", c.lambda},
          {"iters", c.iters},
          {"patience", c.patience},
          {"tolerance", c.tolerance},
          {"seed", c.seed},
          {"threads", c.threads},
          {"width", c.width},
          {"height", c.height},
          {"surface_width", c.surface_width},
          {"surface_height", c.surface_height},
          {"noise", c.noise},
          {"scene", c.scene},
          {"transformations", c.transformations},
          {"out", c.out},
          {"split", c.split},
          {"ours", c.ours}};
}

/// Overlays the keys present in `j` onto `c`. Unknown keys are rejected.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::config, "config file must hold a JSON object");
  const nlohmann::json known = to_json(c);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key) && key != "manifest_version")
      throw Error(ErrorKind::config, "unknown config key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("command", c.command);
    get("scorer", c.scorer);
    get("endpoint", c.endpoint);
    get("timeout", c.timeout);
    get("retry_limit", c.retry_limit);
    get("alpha", c.alpha);
    get("sigma", c.sigma);
    get("lambda", c.lambda);
    get("iters", c.iters);
    get("patience", c.patience);
    get("tolerance", c.tolerance);
    get("seed", c.seed);
    get("threads", c.threads);
    get("width", c.width);
    get("height", c.height);
    get("surface_width", c.surface_width);
    get("surface_height", c.surface_height);
    get("noise", c.noise);
    get("scene", c.scene);
    get("transformations", c.transformations);
    get("out", c.out);
    get("split", c.split);
    get("ours", c.ours);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("config file: ") + e.what());
  }
}

/// Parses argv: `cca <command> [--config FILE] [flags]`. Flags override the
/// config file, which overrides built-in defaults.
/// Thrown when argument parsing ends the program early (help or usage error).
struct UsageExit {
  int code = 0;
};

inline RunConfig parse_args(int argc, const char* const* argv, std::ostream& out = std::cout,
                            std::ostream& err = std::cerr) {
  CLI::App app{"Contextual camouflage search"};
  app.require_subcommand(1);
  RunConfig flags;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config or manifest file");
    sub->add_option("--scorer", flags.scorer, "synth | bridge")->check(CLI::IsMember({"synth", "bridge"}));
    sub->add_option("--endpoint", flags.endpoint, "bridge service URL, e.g. http://127.0.0.1:8765");
    sub->add_option("--timeout", flags.timeout, "bridge request timeout in seconds");
    sub->add_option("--retries", flags.retry_limit, "bridge retries on transport failure");
    sub->add_option("--alpha", flags.alpha, "learning rate");
    sub->add_option("--sigma", flags.sigma, "search distribution std (channel units)");
    sub->add_option("--lambda", flags.lambda, "population size");
    sub->add_option("--iters", flags.iters, "iteration budget");
    sub->add_option("--patience", flags.patience, "iterations without improvement before stopping");
    sub->add_option("--tolerance", flags.tolerance, "minimum improvement that resets patience");
    sub->add_option("--seed", flags.seed, "base seed");
    sub->add_option("--threads", flags.threads, "evaluation threads (0 = all cores)");
    sub->add_option("--width", flags.width, "pattern width");
    sub->add_option("--height", flags.height, "pattern height");
    sub->add_option("--surface-width", flags.surface_width, "synthetic vehicle surface width");
    sub->add_option("--surface-height", flags.surface_height, "synthetic vehicle surface height");
    sub->add_option("--noise", flags.noise, "synthetic scorer noise std");
    sub->add_option("--scene", flags.scene, "synthetic scene spec JSON");
    sub->add_option("--transformations", flags.transformations, "training subset size (0 = all train transformations)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--split", flags.split, "train | test | both")->check(CLI::IsMember({"train", "test", "both"}));
    sub->add_option("--ours", flags.ours, "learned pattern (PPM; a .json sidecar is preferred when present)");
  };

  std::vector<CLI::App*> subs{app.add_subcommand("attack", "learn a pattern that lowers detection of other vehicles"),
                              app.add_subcommand("enhance", "learn a pattern that raises detection of other vehicles"),
                              app.add_subcommand("eval", "evaluate a pattern on the selected split(s)"),
                              app.add_subcommand("baselines", "basic colors / random / ours comparison table")};
  for (auto* sub : subs) add_common(sub);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    throw UsageExit{app.exit(e, out, err)};
  }

  RunConfig config;
  CLI::App* chosen = nullptr;
  for (auto* sub : subs)
    if (sub->parsed()) chosen = sub;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorKind::io, "cannot open config " + config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.byte, "config " + config_path + ": " + e.what());
    }
    apply_json(config, j);
  }
  config.command = chosen->get_name();
  // Any option given on the command line wins over the file.
  const nlohmann::json flag_values = to_json(flags);
  nlohmann::json overrides = nlohmann::json::object();
  for (const auto* opt : chosen->get_options()) {
    if (opt->count() == 0) continue;
    std::string key = opt->get_name(false, true);
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key == "config") continue;
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "retries") key = "retry_limit";
    overrides[key] = flag_values.at(key);
  }
  apply_json(config, overrides);
  config.validate();
  return config;
}

// ---------------------------------------------------------------------------
// Command execution

struct Environment {
  std::vector<Transformation> grid;  // full evaluation grid
  std::vector<Transformation> train_set;
  std::unique_ptr<SceneScorer> scorer;
};

inline std::vector<Transformation> select_training(const std::vector<Transformation>& grid, std::size_t count,
                                                   std::uint64_t seed) {
  auto train = filter_split(grid, Split::train);
  if (train.empty()) throw Error(ErrorKind::config, "grid has no training transformations");
  if (count == 0 || count >= train.size()) return train;
  const SeedStream stream(mix_seed(seed, {0x7a1e}));
  for (std::size_t i = train.size() - 1; i > 0; --i) std::swap(train[i], train[stream.bits(i) % (i + 1)]);
  train.resize(count);
  std::sort(train.begin(), train.end(), [](const Transformation& a, const Transformation& b) {
    return std::pair(a.location_id, a.orientation_id) < std::pair(b.location_id, b.orientation_id);
  });
  return train;
}

inline Environment make_environment(const RunConfig& c) {
  Environment env;
  if (c.scorer == "bridge") {
    env.grid = build_transformation_grid(c.seed);
    env.scorer = std::make_unique<BridgeScorer>(BridgeConfig{c.endpoint, c.timeout, c.retry_limit, kBridgeProtocol});
  } else {
    SynthSceneSpec spec;
    if (!c.scene.empty()) {
      const auto bytes = read_file(c.scene);
      try {
        spec = synth_spec_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.byte, "scene " + c.scene + ": " + e.what());
      }
      for (const auto& s : spec.scenes) env.grid.push_back(s.transformation);
    } else {
      env.grid = build_transformation_grid(c.seed);
      spec = make_synth_spec(env.grid, {c.width, c.height, c.surface_width, c.surface_height, c.noise, 0.5}, c.seed);
    }
    if (spec.pattern_width != c.width || spec.pattern_height != c.height)
      throw Error(ErrorKind::invalid_dimension, "pattern size differs from the synthetic scene's pattern size");
    env.scorer = std::make_unique<SynthScorer>(std::move(spec));
  }
  env.train_set = select_training(env.grid, c.transformations, c.seed);
  return env;
}

inline std::vector<Split> selected_splits(const RunConfig& c) {
  if (c.split == "train") return {Split::train};
  if (c.split == "test") return {Split::test};
  return {Split::train, Split::test};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) { write_file(path, text); }

inline void write_reports(const std::filesystem::path& dir, const std::vector<EvalReport>& reports) {
  std::ostringstream csv;
  write_reports_csv(csv, reports);
  write_text(dir / "report.csv", csv.str());
  auto arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  write_text(dir / "report.json", arr.dump(2) + "\n");
}

inline void write_manifest(const std::filesystem::path& dir, const RunConfig& c) {
  auto j = to_json(c);
  j["manifest_version"] = 1;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

inline OptimizerConfig optimizer_config(const RunConfig& c, Mode mode, std::vector<Transformation> train) {
  OptimizerConfig oc;
  oc.mode = mode;
  oc.alpha = c.alpha;
  oc.sigma = c.sigma;
  oc.lambda = c.lambda;
  oc.max_iterations = c.iters;
  oc.patience = c.patience;
  oc.tolerance = c.tolerance;
  oc.base_seed = c.seed;
  oc.transformations = std::move(train);
  oc.threads = c.threads;
  return oc;
}

inline void cmd_optimize(const RunConfig& c, Mode mode, std::ostream& log) {
  const std::filesystem::path dir(c.out);
  std::filesystem::create_directories(dir);
  write_manifest(dir, c);
  auto env = make_environment(c);
  write_text(dir / "transformations.json", transformations_to_json(env.grid).dump() + "\n");

  const auto oc = optimizer_config(c, mode, env.train_set);
  const auto initial = new_random(c.width, c.height, mix_seed(c.seed, {0x1417}));
  const auto result = run(oc, *env.scorer, initial, [&](const SearchState& s) {
    if (s.iteration % 10 == 0)
      log << "iter " << s.iteration << " objective " << s.current_objective << " best " << s.best_objective << '\n';
  });
  log << to_string(mode) << " finished after " << result.final_state.iteration << " iterations, best objective "
      << result.best_objective << '\n';

  save(result.best, dir / "best.ppm");
  std::ostringstream curve;
  write_history_csv(curve, result.history);
  write_text(dir / "curve.csv", curve.str());

  std::vector<EvalReport> reports;
  for (Split split : {Split::train, Split::test})
    reports.push_back(evaluate_pattern(result.best, *env.scorer, env.grid, split, kOursLabel, c.threads));
  write_reports(dir, reports);
}

inline void cmd_eval(const RunConfig& c, std::ostream& log) {
  const std::filesystem::path dir(c.out);
  std::filesystem::create_directories(dir);
  write_manifest(dir, c);
  const auto loaded = load(c.ours);
  if (loaded.rounded) log << "warning: no sidecar for " << c.ours << ", using 8-bit channels\n";
  auto env = make_environment(c);
  std::vector<EvalReport> reports;
  for (Split split : selected_splits(c))
    reports.push_back(evaluate_pattern(loaded.pattern, *env.scorer, env.grid, split, kOursLabel, c.threads));
  write_reports(dir, reports);
}

inline void cmd_baselines(const RunConfig& c, std::ostream& log) {
  const std::filesystem::path dir(c.out);
  std::filesystem::create_directories(dir);
  write_manifest(dir, c);
  std::optional<CamouflagePattern> ours;
  if (!c.ours.empty()) {
    auto loaded = load(c.ours);
    if (loaded.rounded) log << "warning: no sidecar for " << c.ours << ", using 8-bit channels\n";
    ours = std::move(loaded.pattern);
  }
  auto env = make_environment(c);
  const auto suite = build_suite(c.width, c.height, c.seed);
  std::vector<std::vector<EvalReport>> blocks;
  for (Split split : selected_splits(c))
    blocks.push_back(evaluate_all(suite, ours, *env.scorer, env.grid, split, c.threads));
  std::ostringstream csv;
  write_comparison_csv(csv, blocks);
  write_text(dir / "comparison.csv", csv.str());
  std::vector<EvalReport> flat;
  for (const auto& b : blocks) flat.insert(flat.end(), b.begin(), b.end());
  write_reports(dir, flat);
}

/// Runs a resolved config. Returns the process exit status; module errors are
/// reported on `err` as one JSON object.
inline int run_command(const RunConfig& c, std::ostream& log, std::ostream& err) {
  try {
    c.validate();
    if (c.command == "attack")
      cmd_optimize(c, Mode::attack, log);
    else if (c.command == "enhance")
      cmd_optimize(c, Mode::enhance, log);
    else if (c.command == "eval")
      cmd_eval(c, log);
    else
      cmd_baselines(c, log);
    return 0;
  } catch (const Error& e) {
    err << nlohmann::json{{"error", to_string(e.kind())}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}

}  // namespace cca::cli

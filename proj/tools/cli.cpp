#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgbr/balancing.hpp"
#include "dgbr/core.hpp"
#include "dgbr/error.hpp"
#include "dgbr/evalharness.hpp"
#include "dgbr/model.hpp"
#include "dgbr/synthgen.hpp"
#include "dgbr/theory.hpp"

#ifndef DGBR_VERSION
#define DGBR_VERSION "dev"
#endif

namespace dgbr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

// Paths inside a config file are relative to that file.
struct Config {
  json doc;
  fs::path base;

  fs::path path_at(const std::string& key) const {
    if (!doc.contains(key)) throw Error(ErrorKind::kConfig, "config is missing '" + key + "'");
    const fs::path p(doc.at(key).get<std::string>());
    return p.is_absolute() ? p : base / p;
  }
};

Config read_config(const std::string& path) {
  Config c;
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  try {
    c.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!c.doc.is_object()) throw Error(ErrorKind::kConfig, "config must be a JSON object");
  c.base = fs::path(path).parent_path();
  return c;
}

fs::path output_dir(const Config& c, const Overrides& o) {
  if (o.out) return *o.out;
  if (c.doc.contains("out")) return c.path_at("out");
  throw Error(ErrorKind::kConfig, "no output directory (set \"out\" or pass --out)");
}

std::uint64_t global_seed(const Config& c, const Overrides& o) {
  if (o.seed) return *o.seed;
  return c.doc.value("seed", std::uint64_t{0});
}

void write_manifest(const fs::path& dir, const std::string& command, const json& resolved,
                    const std::vector<std::string>& outputs) {
  json m{{"command", command},
         {"version", DGBR_VERSION},
         {"config", resolved},
         {"outputs", outputs}};
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

BinaryDataset load_training(const Config& c) {
  if (c.doc.contains("suite")) return load_suite(c.path_at("suite")).train;
  if (c.doc.contains("data")) return load_csv(c.path_at("data"));
  throw Error(ErrorKind::kConfig, "config needs \"suite\" or \"data\"");
}

std::vector<Method> methods_of(const Config& c) {
  std::vector<Method> out;
  if (!c.doc.contains("methods")) return {Method::kLR, Method::kDLR, Method::kGBR, Method::kDGBR};
  for (const auto& m : c.doc.at("methods")) out.push_back(parse_method(m.get<std::string>()));
  if (out.empty()) throw Error(ErrorKind::kConfig, "\"methods\" is empty");
  return out;
}

// Base hyperparameters, overlaid with hyper_by_method[<name>] when present.
HyperParams hyper_for(const Config& c, Method m) {
  json h = c.doc.value("hyper", json::object());
  if (c.doc.contains("hyper_by_method")) {
    const auto& by = c.doc.at("hyper_by_method");
    if (by.contains(method_name(m))) h.update(by.at(method_name(m)));
  }
  return hyper_from_json(h.dump());
}

// ---- generate ----

int cmd_generate(const Config& c, const Overrides& o) {
  json spec_doc = c.doc.value("spec", json::object());
  if (o.seed) spec_doc["seed"] = *o.seed;
  const GenSpec spec = gen_spec_from_json(spec_doc.dump());
  std::vector<double> rates = default_test_rates();
  if (c.doc.contains("test_rates")) rates = c.doc.at("test_rates").get<std::vector<double>>();
  for (double r : rates) {
    if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::kConfig, "test rates must lie in (0, 1)");
  }
  const fs::path out = output_dir(c, o);

  const EnvironmentSuite suite = make_suite(spec, rates);
  save_suite(suite, out);
  json resolved{{"spec", json::parse(to_json(spec))}, {"test_rates", rates}, {"out", out.string()}};
  std::vector<std::string> outputs{"suite.json", "train.csv"};
  for (const auto& [label, _] : suite.tests) outputs.push_back(label);
  write_manifest(out, "generate", resolved, outputs);
  std::cout << (out / "suite.json").string() << "\n";
  return kExitOk;
}

// ---- train ----

int cmd_train(const Config& c, const Overrides& o) {
  const BinaryDataset train = load_training(c);
  const std::vector<Method> methods = methods_of(c);
  const fs::path out = output_dir(c, o);
  const std::uint64_t seed = global_seed(c, o);
  // fixed-weight baselines get penalties rescaled to unit total weight
  const bool match = c.doc.value("match_baselines", true);

  json resolved{{"seed", seed}, {"out", out.string()}, {"match_baselines", match}, {"methods", json::array()}, {"hyper", json::object()}};
  if (c.doc.contains("suite")) resolved["suite"] = c.path_at("suite").string();
  if (c.doc.contains("data")) resolved["data"] = c.path_at("data").string();

  std::vector<std::pair<Method, HyperParams>> plan;
  for (Method m : methods) {
    HyperParams h = hyper_for(c, m);
    if (match && (m == Method::kLR || m == Method::kDLR)) h = matched_baseline(h, train.n());
    h.seed = derive_seed(seed, "train/" + method_name(m));
    plan.emplace_back(m, h);
    resolved["methods"].push_back(method_name(m));
    resolved["hyper"][method_name(m)] = json::parse(to_json(h));
  }

  std::vector<std::string> outputs;
  for (const auto& [m, h] : plan) {
    const FitResult r = fit(m, train, h);
    const std::string name = method_name(m);
    write_file_atomic(out / ("model_" + name + ".json"), to_json(r.model) + "\n");
    write_file_atomic(out / ("trace_" + name + ".csv"), r.trace.to_csv());
    write_file_atomic(out / ("balance_" + name + ".json"),
                      to_json(imbalance_report(train.features(), r.model.weights.weights())) + "\n");
    outputs.push_back("model_" + name + ".json");
    outputs.push_back("trace_" + name + ".csv");
    outputs.push_back("balance_" + name + ".json");
    std::cerr << name << ": " << r.trace.records.size() - 1 << " iterations, L_mix "
              << r.trace.records.back().l_mix << "\n";
  }
  write_manifest(out, "train", resolved, outputs);
  return kExitOk;
}

// ---- eval ----

std::string tidy_row(const std::string& method, const std::string& env, const std::string& metric,
                     double value) {
  std::ostringstream s;
  s.precision(17);
  s << method << "," << env << "," << metric << "," << value << "\n";
  return s.str();
}

int cmd_eval(const Config& c, const Overrides& o) {
  const EnvironmentSuite suite = load_suite(c.path_at("suite"));
  if (suite.tests.size() < 2) {
    throw Error(ErrorKind::kInsufficientEnvironments,
                "suite has " + std::to_string(suite.tests.size()) + " test environment(s), need 2");
  }
  const fs::path out = output_dir(c, o);

  std::map<std::string, fs::path> models;
  if (c.doc.contains("models")) {
    for (const auto& [name, path] : c.doc.at("models").items()) {
      const fs::path p(path.get<std::string>());
      models[name] = p.is_absolute() ? p : c.base / p;
    }
  } else {
    const fs::path dir = c.path_at("model_dir");
    for (Method m : methods_of(c)) models[method_name(m)] = dir / ("model_" + method_name(m) + ".json");
  }
  if (models.empty()) throw Error(ErrorKind::kConfig, "no models to evaluate");

  json resolved{{"suite", c.path_at("suite").string()}, {"out", out.string()}, {"models", json::object()}};
  std::string tidy = "method,environment,metric,value\n";
  json summary = json::object();
  std::vector<std::string> outputs{"results.csv", "summary.json"};
  for (const auto& [name, path] : models) {
    resolved["models"][name] = path.string();
    const DgbrModel model = model_from_json(read_file(path));
    const SweepResult s = sweep(model, suite);
    for (const auto& [label, e] : s.per_env) tidy += tidy_row(name, label, "rmse", e);
    tidy += tidy_row(name, "all", "average_error", s.average_error);
    tidy += tidy_row(name, "all", "stability_error", s.stability_error);
    summary[name] = json::parse(s.to_json());
    write_file_atomic(out / ("sweep_" + name + ".csv"), s.to_csv());
    outputs.push_back("sweep_" + name + ".csv");
  }
  write_file_atomic(out / "results.csv", tidy);
  write_file_atomic(out / "summary.json", summary.dump(2) + "\n");
  write_manifest(out, "eval", resolved, outputs);
  return kExitOk;
}

// ---- tune ----

std::vector<HyperParams> expand_grid(const Config& c, json& resolved) {
  std::vector<json> points;
  if (c.doc.contains("grid")) {
    for (const auto& g : c.doc.at("grid")) points.push_back(g);
  } else if (c.doc.contains("grid_axes")) {
    const json base = c.doc.value("hyper", json::object());
    points.push_back(base);
    // axes are expanded in key order, first key varying slowest
    for (const auto& [key, values] : c.doc.at("grid_axes").items()) {
      if (!values.is_array() || values.empty()) {
        throw Error(ErrorKind::kConfig, "grid axis '" + key + "' must be a non-empty array");
      }
      std::vector<json> next;
      for (const auto& p : points) {
        for (const auto& v : values) {
          json q = p;
          q[key] = v;
          next.push_back(std::move(q));
        }
      }
      points = std::move(next);
    }
  } else {
    throw Error(ErrorKind::kConfig, "tune config needs \"grid\" or \"grid_axes\"");
  }
  std::vector<HyperParams> grid;
  resolved["grid"] = json::array();
  for (const auto& p : points) {
    grid.push_back(hyper_from_json(p.dump()));
    resolved["grid"].push_back(json::parse(to_json(grid.back())));
  }
  return grid;
}

int cmd_tune(const Config& c, const Overrides& o) {
  const BinaryDataset train = load_training(c);
  const Method method = parse_method(c.doc.value("method", std::string("DGBR")));
  const fs::path out = output_dir(c, o);
  const std::uint64_t seed = global_seed(c, o);

  ValidationOptions v;
  if (c.doc.contains("validation")) {
    const auto& vj = c.doc.at("validation");
    v.rates = vj.value("rates", v.rates);
    v.noisy_quantile = vj.value("noisy_quantile", v.noisy_quantile);
    v.bias_features = vj.value("bias_features", v.bias_features);
  }
  json resolved{{"method", method_name(method)}, {"seed", seed}, {"out", out.string()},
                {"validation", {{"rates", v.rates}, {"noisy_quantile", v.noisy_quantile},
                                {"bias_features", v.bias_features}}}};
  std::vector<HyperParams> grid = expand_grid(c, resolved);
  for (std::size_t g = 0; g < grid.size(); ++g) grid[g].seed = derive_seed(seed, "tune/fit");
  const HyperParams hint = hyper_from_json(c.doc.value("hint_hyper", json::object()).dump());

  const Fitter fitter = [method](const BinaryDataset& d, const HyperParams& h) {
    return fit(method, d, h).model;
  };
  const TuneResult r = tune(train, grid, fitter, derive_seed(seed, "tune/validation"), v, hint);
  write_file_atomic(out / "tuning.csv", r.to_csv());
  write_file_atomic(out / "best_hyper.json", to_json(r.best) + "\n");
  write_manifest(out, "tune", resolved, {"tuning.csv", "best_hyper.json"});
  std::cerr << "best grid point: " << r.best_index << "\n";
  return kExitOk;
}

// ---- theory ----

int cmd_theory(const Config& c, const Overrides& o) {
  const fs::path out = output_dir(c, o);
  json resolved{{"out", out.string()}};
  std::vector<std::string> outputs;
  if (c.doc.contains("grid")) {
    const auto ns = c.doc.at("grid").at("n").get<std::vector<std::int64_t>>();
    const auto ps = c.doc.at("grid").at("p").get<std::vector<int>>();
    std::ostringstream csv;
    csv.precision(17);
    csv << "n,p,expected_alpha\n";
    for (int p : ps) {
      for (std::int64_t n : ns) csv << n << "," << p << "," << expected_alpha(n, p) << "\n";
    }
    write_file_atomic(out / "expected_alpha.csv", csv.str());
    resolved["grid"] = {{"n", ns}, {"p", ps}};
    outputs.push_back("expected_alpha.csv");
  }
  if (c.doc.contains("bound")) {
    const BoundInputs b = bound_inputs_from_json(c.doc.at("bound").dump());
    write_file_atomic(out / "bound.json", to_json(risk_bound(b)) + "\n");
    resolved["bound"] = c.doc.at("bound");
    outputs.push_back("bound.json");
  }
  if (outputs.empty()) throw Error(ErrorKind::kConfig, "theory config needs \"grid\" or \"bound\"");
  write_manifest(out, "theory", resolved, outputs);
  return kExitOk;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::kConfig:
    case ErrorKind::kDomain:
      return kExitConfig;
    case ErrorKind::kInvalidInput:
    case ErrorKind::kParse:
    case ErrorKind::kSchema:
    case ErrorKind::kShape:
    case ErrorKind::kUnsupportedDimension:
    case ErrorKind::kInvalidWeights:
    case ErrorKind::kInvalidTrainingData:
    case ErrorKind::kEmptyResult:
    case ErrorKind::kInsufficientEnvironments:
      return kExitData;
    case ErrorKind::kGenerationFailure:
    case ErrorKind::kTuningFailure:
    case ErrorKind::kIo:
      return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Stable prediction with global sample-weight balancing", "dgbr"};
  app.set_version_flag("--version", DGBR_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  Overrides over;
  std::uint64_t seed = 0;
  std::string out;
  using Handler = int (*)(const Config&, const Overrides&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  const std::vector<std::tuple<std::string, std::string, Handler>> specs{
      {"generate", "Write a synthetic environment suite", cmd_generate},
      {"train", "Fit LR, DLR, GBR and/or DGBR on a training set", cmd_train},
      {"eval", "Score fitted models on every test environment", cmd_eval},
      {"tune", "Grid-search hyperparameters on validation environments", cmd_tune},
      {"theory", "Evaluate E[alpha] grids and the risk bound", cmd_theory}};
  for (const auto& [name, help, handler] : specs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the global seed");
    sub->add_option("--out", out, "override the output directory");
    commands.emplace_back(sub, handler);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << DGBR_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config-error: " << e.what() << "\n";
    return kExitConfig;
  }

  for (const auto& [sub, handler] : commands) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed") > 0) over.seed = seed;
    if (sub->count("--out") > 0) over.out = out;
    try {
      return handler(read_config(config_path), over);
    } catch (const Error& e) {
      std::cerr << "error: " << error_kind_name(e.kind()) << ": " << e.what() << "\n";
      return exit_code_for(e.kind());
    } catch (const json::exception& e) {
      std::cerr << "error: config-error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "error: io-error: " << e.what() << "\n";
      return kExitRuntime;
    } catch (const std::exception& e) {
      std::cerr << "error: runtime-error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitConfig;
}

}  // namespace dgbr::cli

#include "dgbr/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <json.hpp>

#include "dgbr/error.hpp"
#include "dgbr/synthgen.hpp"

namespace dgbr {

double rmse(const Vector& predictions, const Vector& truth) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorKind::kShape, "rmse: predictions and truth differ in length");
  }
  if (truth.size() == 0) throw Error(ErrorKind::kShape, "rmse: empty input");
  return std::sqrt((predictions - truth).squaredNorm() / static_cast<double>(truth.size()));
}

SweepResult summarize(std::vector<std::pair<std::string, double>> per_env) {
  if (per_env.size() < 2) {
    throw Error(ErrorKind::kInsufficientEnvironments, "need at least 2 environments, got " +
                                                          std::to_string(per_env.size()));
  }
  SweepResult r;
  r.per_env = std::move(per_env);
  // sort a copy so the aggregates do not depend on environment order
  std::vector<double> errs;
  for (const auto& e : r.per_env) errs.push_back(e.second);
  std::sort(errs.begin(), errs.end());
  const double k = static_cast<double>(errs.size());
  r.average_error = std::accumulate(errs.begin(), errs.end(), 0.0) / k;
  double ss = 0.0;
  for (double e : errs) ss += (e - r.average_error) * (e - r.average_error);
  r.stability_error = std::sqrt(ss / (k - 1.0));
  return r;
}

SweepResult sweep(const DgbrModel& model,
                  const std::vector<std::pair<std::string, BinaryDataset>>& envs) {
  if (envs.size() < 2) {
    throw Error(ErrorKind::kInsufficientEnvironments, "need at least 2 environments, got " +
                                                          std::to_string(envs.size()));
  }
  std::vector<std::pair<std::string, double>> per_env;
  for (const auto& [label, d] : envs) {
    per_env.emplace_back(label, rmse(model.predict_proba(d.features()), d.outcome()));
  }
  return summarize(std::move(per_env));
}

SweepResult sweep(const DgbrModel& model, const EnvironmentSuite& suite) {
  return sweep(model, suite.tests);
}

std::string SweepResult::to_csv() const {
  std::string out = "environment,rmse\n";
  char buf[64];
  for (const auto& [label, e] : per_env) {
    std::snprintf(buf, sizeof buf, ",%.17g\n", e);
    out += label + buf;
  }
  return out;
}

std::string SweepResult::to_json() const {
  nlohmann::json envs = nlohmann::json::array();
  for (const auto& [label, e] : per_env) envs.push_back({{"environment", label}, {"rmse", e}});
  nlohmann::json j{{"per_env", envs},
                   {"average_error", average_error},
                   {"stability_error", stability_error}};
  return j.dump(2);
}

std::vector<Index> empirical_noisy_features(const DgbrModel& hint, double quantile) {
  if (hint.autoenc.depth() != 0) {
    throw Error(ErrorKind::kInvalidInput, "noisy-feature hint needs an identity-embedding model");
  }
  if (!(quantile > 0.0 && quantile <= 1.0)) {
    throw Error(ErrorKind::kDomain, "noisy quantile must lie in (0, 1]");
  }
  const Index p = hint.beta.size();
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(hint.beta(a)) < std::abs(hint.beta(b));
  });
  const auto count = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(p)));
  order.resize(std::min(order.size(), count));
  return order;
}

std::vector<std::pair<std::string, BinaryDataset>> build_validation_envs(
    const BinaryDataset& train, const DgbrModel& hint, const ValidationOptions& options,
    std::uint64_t seed) {
  if (hint.beta.size() != train.p()) {
    throw Error(ErrorKind::kShape, "hint model does not match the training features");
  }
  StableSplit split;
  split.noisy = empirical_noisy_features(hint, options.noisy_quantile);
  for (Index j = 0; j < train.p(); ++j) {
    if (std::find(split.noisy.begin(), split.noisy.end(), j) == split.noisy.end()) {
      split.stable.push_back(j);
    }
  }
  const auto match = bias_match_yv(train, split, options.bias_features);
  std::vector<std::pair<std::string, BinaryDataset>> envs;
  for (double r : options.rates) {
    const std::string label = rate_label(r);
    std::mt19937_64 rng(derive_seed(seed, "validation/" + label));
    envs.emplace_back(label, resample_biased(train, match, r, train.n(), rng));
  }
  return envs;
}

TuneResult tune_on(const BinaryDataset& train, const std::vector<HyperParams>& grid,
                   const Fitter& fitter,
                   const std::vector<std::pair<std::string, BinaryDataset>>& validation) {
  if (grid.empty()) throw Error(ErrorKind::kConfig, "tuning grid is empty");
  TuneResult result;
  bool any = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    TuneRow row;
    row.index = g;
    try {
      const DgbrModel model = fitter(train, grid[g]);
      const SweepResult s = sweep(model, validation);
      row.ok = true;
      row.average_error = s.average_error;
      row.stability_error = s.stability_error;
      row.score = s.average_error + kStabilityWeight * s.stability_error;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    if (row.ok && (!any || row.score < result.table[result.best_index].score)) {
      result.best_index = g;
      any = true;
    }
    result.table.push_back(std::move(row));
  }
  if (!any) throw Error(ErrorKind::kTuningFailure, "every grid point failed to fit");
  result.best = grid[result.best_index];
  return result;
}

TuneResult tune(const BinaryDataset& train, const std::vector<HyperParams>& grid,
                const Fitter& fitter, std::uint64_t seed, const ValidationOptions& options,
                const HyperParams& hint_hyper) {
  if (grid.empty()) throw Error(ErrorKind::kConfig, "tuning grid is empty");
  const DgbrModel hint = fit_gbr(train, hint_hyper).model;
  return tune_on(train, grid, fitter, build_validation_envs(train, hint, options, seed));
}

std::string TuneResult::to_csv() const {
  std::string out = "grid_index,ok,average_error,stability_error,score,error\n";
  char buf[160];
  for (const auto& r : table) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g,%.17g,", r.index, r.ok ? 1 : 0,
                  r.average_error, r.stability_error, r.score);
    std::string msg = r.error;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    out += buf + (msg.empty() ? std::string() : "\"" + msg + "\"") + "\n";
  }
  return out;
}

}  // namespace dgbr

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dgbr/core.hpp"
#include "dgbr/model.hpp"

namespace dgbr {

/// Weight of the stability term in the tuning score.
inline constexpr double kStabilityWeight = 5.0;

double rmse(const Vector& predictions, const Vector& truth);

struct SweepResult {
  std::vector<std::pair<std::string, double>> per_env;
  double average_error = 0.0;
  double stability_error = 0.0;  // sample standard deviation

  std::string to_csv() const;   // environment,rmse
  std::string to_json() const;
};

/// Aggregates per-environment errors; needs at least two environments.
SweepResult summarize(std::vector<std::pair<std::string, double>> per_env);

SweepResult sweep(const DgbrModel& model, const EnvironmentSuite& suite);
SweepResult sweep(const DgbrModel& model,
                  const std::vector<std::pair<std::string, BinaryDataset>>& envs);

struct ValidationOptions {
  std::vector<double> rates{0.3, 0.5, 0.7};
  double noisy_quantile = 0.5;  // fraction of features treated as noisy
  Index bias_features = 4;
};

/// Columns with the smallest |beta| under an identity-embedding model,
/// smallest first; ceil(quantile * p) of them.
std::vector<Index> empirical_noisy_features(const DgbrModel& hint, double quantile);

/// One resampled copy of `train` per rate, biased on the empirical noisy
/// features of `hint`. Labels are rate_label(rate).
std::vector<std::pair<std::string, BinaryDataset>> build_validation_envs(
    const BinaryDataset& train, const DgbrModel& hint, const ValidationOptions& options,
    std::uint64_t seed);

using Fitter = std::function<DgbrModel(const BinaryDataset&, const HyperParams&)>;

struct TuneRow {
  std::size_t index = 0;
  bool ok = false;
  double average_error = 0.0;
  double stability_error = 0.0;
  double score = 0.0;
  std::string error;
};

struct TuneResult {
  HyperParams best;
  std::size_t best_index = 0;
  std::vector<TuneRow> table;

  std::string to_csv() const;
};

/// Picks the grid point minimising Average_Error + 5 Stability_Error on the
/// validation environments; the first grid point wins ties.
TuneResult tune(const BinaryDataset& train, const std::vector<HyperParams>& grid,
                const Fitter& fitter, std::uint64_t seed, const ValidationOptions& options = {},
                const HyperParams& hint_hyper = {});

/// Same, with precomputed validation environments.
TuneResult tune_on(const BinaryDataset& train, const std::vector<HyperParams>& grid,
                   const Fitter& fitter,
                   const std::vector<std::pair<std::string, BinaryDataset>>& validation);

}  // namespace dgbr

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dgbr/core.hpp"

namespace dgbr {

enum class Setting { kSIndepV, kSToV, kVToS };
enum class OutcomeMode { kA, kB };
enum class BiasMode { kYGivenV, kVGivenS };

std::string setting_name(Setting s);      // "S_indep_V", "S_to_V", "V_to_S"
std::string outcome_mode_name(OutcomeMode m);  // "A", "B"
std::string bias_mode_name(BiasMode m);   // "Y_given_V", "V_given_S"
Setting parse_setting(const std::string& s);
OutcomeMode parse_outcome_mode(const std::string& s);
BiasMode parse_bias_mode(const std::string& s);

/// Largest number of candidate rows drawn for one environment.
inline constexpr std::int64_t kCandidateCap = 10'000'000;

struct GenSpec {
  Setting setting = Setting::kSIndepV;
  Index n = 2000;
  Index p = 20;
  double r = 0.85;
  OutcomeMode outcome_mode = OutcomeMode::kA;
  BiasMode bias_mode = BiasMode::kYGivenV;
  std::uint64_t seed = 0;
  /// Leading noisy columns that must all match the target for the
  /// probability-r branch (capped at the number of noisy columns).
  Index bias_features = 4;

  Index stable_count() const;  // round(0.4 p)
  Index noisy_count() const { return p - stable_count(); }
  Index bias_count() const;
  StableSplit split() const;   // stable columns first
  void validate() const;
};

/// splitmix64 of (seed xor FNV-1a(label)).
std::uint64_t derive_seed(std::uint64_t seed, const std::string& label);

/// `rows` unselected feature rows for the spec's setting, columns S then V.
Matrix gen_features(const GenSpec& spec, Index rows, std::mt19937_64& rng);

/// Argument of the outcome sigmoid (before noise).
Vector outcome_logit(const Matrix& features, const StableSplit& split, OutcomeMode mode, Index p);

/// Binary outcome; mode A draws N(0, 0.2) noise from `rng`, mode B ignores it.
Vector gen_outcome(const Matrix& features, const StableSplit& split, OutcomeMode mode,
                   std::mt19937_64& rng);

/// 1 where the mediator sum over S for noisy column i is positive, one
/// column per designated noisy column.
Matrix mediator_z(const Matrix& features, const StableSplit& split, Index count);

/// Per-row flag: every designated noisy column equals the target.
std::vector<char> bias_match_yv(const BinaryDataset& data, const StableSplit& split, Index count);
std::vector<char> bias_match_vs(const BinaryDataset& data, const StableSplit& split, Index count);

/// Resamples rows of `pool` by walking seeded permutations of it (reshuffled
/// after each pass) and keeping a row with probability r when match[i] is
/// set and 1 - r otherwise, until n rows are kept.
BinaryDataset resample_biased(const BinaryDataset& pool, const std::vector<char>& match, double r,
                              Index n, std::mt19937_64& rng);

BinaryDataset bias_select_yv(const BinaryDataset& pool, const StableSplit& split, double r, Index n,
                             std::mt19937_64& rng, Index count = 4);
BinaryDataset bias_select_vs(const BinaryDataset& pool, const StableSplit& split, double r, Index n,
                             std::mt19937_64& rng, Index count = 4);

/// Draws fresh candidates in seeded chunks and applies the spec's biased
/// selection at rate r until spec.n rows are kept.
BinaryDataset generate_environment(const GenSpec& spec, double r, std::uint64_t seed);

/// Train environment at spec.r plus one test environment per rate, each
/// from its own pool with seed derive_seed(spec.seed, label).
EnvironmentSuite make_suite(const GenSpec& spec, const std::vector<double>& test_rates);

/// "r=0.15" style label.
std::string rate_label(double r);

std::vector<double> default_test_rates();  // 0.15, 0.25, ..., 0.85

std::string to_json(const GenSpec& spec);
GenSpec gen_spec_from_json(const std::string& text);

}  // namespace dgbr

#include "dgbr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "dgbr/error.hpp"

namespace dgbr {

namespace {

constexpr double kCouplingNoiseSd = 2.0;
constexpr double kOutcomeNoiseSd = 0.2;
constexpr Index kChunkRows = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Index wrap(Index j, Index size) { return ((j % size) + size) % size; }

}  // namespace

std::string setting_name(Setting s) {
  switch (s) {
    case Setting::kSIndepV: return "S_indep_V";
    case Setting::kSToV: return "S_to_V";
    case Setting::kVToS: return "V_to_S";
  }
  return "?";
}

std::string outcome_mode_name(OutcomeMode m) { return m == OutcomeMode::kA ? "A" : "B"; }

std::string bias_mode_name(BiasMode m) {
  return m == BiasMode::kYGivenV ? "Y_given_V" : "V_given_S";
}

Setting parse_setting(const std::string& s) {
  if (s == "S_indep_V") return Setting::kSIndepV;
  if (s == "S_to_V") return Setting::kSToV;
  if (s == "V_to_S") return Setting::kVToS;
  throw Error(ErrorKind::kConfig, "unknown setting '" + s + "'");
}

OutcomeMode parse_outcome_mode(const std::string& s) {
  if (s == "A") return OutcomeMode::kA;
  if (s == "B") return OutcomeMode::kB;
  throw Error(ErrorKind::kConfig, "unknown outcome mode '" + s + "'");
}

BiasMode parse_bias_mode(const std::string& s) {
  if (s == "Y_given_V") return BiasMode::kYGivenV;
  if (s == "V_given_S") return BiasMode::kVGivenS;
  throw Error(ErrorKind::kConfig, "unknown bias mode '" + s + "'");
}

Index GenSpec::stable_count() const {
  return static_cast<Index>(std::lround(0.4 * static_cast<double>(p)));
}

Index GenSpec::bias_count() const { return std::min(bias_features, noisy_count()); }

StableSplit GenSpec::split() const {
  StableSplit s;
  const Index ps = stable_count();
  for (Index j = 0; j < p; ++j) (j < ps ? s.stable : s.noisy).push_back(j);
  return s;
}

void GenSpec::validate() const {
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::kConfig, "bias rate r must lie in (0, 1)");
  if (p < 5) throw Error(ErrorKind::kConfig, "p must be >= 5");
  if (stable_count() < 2) throw Error(ErrorKind::kConfig, "need at least 2 stable features");
  if (n < 1) throw Error(ErrorKind::kConfig, "n must be >= 1");
  if (bias_features < 1) throw Error(ErrorKind::kConfig, "bias_features must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return splitmix64(seed ^ h);
}

Matrix gen_features(const GenSpec& spec, Index rows, std::mt19937_64& rng) {
  spec.validate();
  const Index ps = spec.stable_count();
  const Index pv = spec.noisy_count();
  std::normal_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> coupling(0.0, kCouplingNoiseSd);
  Matrix x(rows, spec.p);
  std::vector<double> s(static_cast<std::size_t>(ps));
  std::vector<double> v(static_cast<std::size_t>(pv));
  for (Index i = 0; i < rows; ++i) {
    switch (spec.setting) {
      case Setting::kSIndepV:
        for (Index j = 0; j < spec.p; ++j) x(i, j) = unit(rng) >= 0.0 ? 1.0 : 0.0;
        break;
      case Setting::kSToV:
        for (auto& a : s) a = unit(rng);
        for (Index j = 0; j < ps; ++j) x(i, j) = s[j] >= 0.0 ? 1.0 : 0.0;
        for (Index j = 0; j < pv; ++j) {
          const double t = s[wrap(j, ps)] + s[wrap(j + 1, ps)] + coupling(rng);
          x(i, ps + j) = t > 1.0 ? 1.0 : 0.0;
        }
        break;
      case Setting::kVToS:
        for (auto& a : v) a = unit(rng);
        for (Index j = 0; j < pv; ++j) x(i, ps + j) = v[j] >= 0.0 ? 1.0 : 0.0;
        for (Index j = 0; j < ps; ++j) {
          const double t = v[wrap(j, pv)] + v[wrap(j + 1, pv)] + coupling(rng);
          x(i, j) = t > 1.0 ? 1.0 : 0.0;
        }
        break;
    }
  }
  return x;
}

Vector outcome_logit(const Matrix& features, const StableSplit& split, OutcomeMode mode, Index p) {
  const auto ps = static_cast<Index>(split.stable.size());
  if (ps < 2) throw Error(ErrorKind::kConfig, "need at least 2 stable features");
  const Index linear = (ps + 1) / 2;
  const Index nonlinear = ps - linear;
  const double pd = static_cast<double>(p);
  Vector logit = Vector::Zero(features.rows());
  for (Index i = 1; i <= linear; ++i) {
    const double sign = i % 2 == 0 ? 1.0 : -1.0;
    const double a = mode == OutcomeMode::kA ? sign * static_cast<double>(i % 3 + 1) * pd / 3.0 : sign;
    logit += a * features.col(split.stable[i - 1]);
  }
  for (Index j = 0; j < nonlinear; ++j) {
    const Index a = split.stable[linear + j];
    const Index b = split.stable[linear + wrap(j + 1, nonlinear)];
    logit += (pd / 2.0) * features.col(a).cwiseProduct(features.col(b));
  }
  return logit;
}

Vector gen_outcome(const Matrix& features, const StableSplit& split, OutcomeMode mode,
                   std::mt19937_64& rng) {
  const Vector logit = outcome_logit(features, split, mode, features.cols());
  std::normal_distribution<double> noise(0.0, kOutcomeNoiseSd);
  Vector y(logit.size());
  for (Index i = 0; i < logit.size(); ++i) {
    double prob = 1.0 / (1.0 + std::exp(-logit(i)));
    if (mode == OutcomeMode::kA) prob += noise(rng);
    y(i) = prob >= 0.5 ? 1.0 : 0.0;
  }
  return y;
}

Matrix mediator_z(const Matrix& features, const StableSplit& split, Index count) {
  const auto ps = static_cast<Index>(split.stable.size());
  count = std::min<Index>(count, static_cast<Index>(split.noisy.size()));
  Matrix z(features.rows(), count);
  for (Index i = 1; i <= count; ++i) {
    Vector sum = Vector::Zero(features.rows());
    for (Index j = i; j <= i + 5; ++j) {
      const double sign = j % 2 == 0 ? 1.0 : -1.0;
      sum += sign * features.col(split.stable[wrap(j - 1, ps)]);
    }
    z.col(i - 1) = (sum.array() > 0.0).cast<double>().matrix();
  }
  return z;
}

std::vector<char> bias_match_yv(const BinaryDataset& data, const StableSplit& split, Index count) {
  count = std::min<Index>(count, static_cast<Index>(split.noisy.size()));
  std::vector<char> match(static_cast<std::size_t>(data.n()), 1);
  for (Index i = 0; i < data.n(); ++i) {
    for (Index c = 0; c < count; ++c) {
      if (data.features()(i, split.noisy[c]) != data.outcome()(i)) {
        match[i] = 0;
        break;
      }
    }
  }
  return match;
}

std::vector<char> bias_match_vs(const BinaryDataset& data, const StableSplit& split, Index count) {
  const Matrix z = mediator_z(data.features(), split, count);
  std::vector<char> match(static_cast<std::size_t>(data.n()), 1);
  for (Index i = 0; i < data.n(); ++i) {
    for (Index c = 0; c < z.cols(); ++c) {
      if (data.features()(i, split.noisy[c]) != z(i, c)) {
        match[i] = 0;
        break;
      }
    }
  }
  return match;
}

BinaryDataset resample_biased(const BinaryDataset& pool, const std::vector<char>& match, double r,
                              Index n, std::mt19937_64& rng) {
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::kDomain, "bias rate r must lie in (0, 1)");
  if (static_cast<Index>(match.size()) != pool.n()) {
    throw Error(ErrorKind::kShape, "match flags must cover every pool row");
  }
  if (pool.n() == 0) throw Error(ErrorKind::kGenerationFailure, "empty pool");
  std::vector<Index> order(static_cast<std::size_t>(pool.n()));
  std::iota(order.begin(), order.end(), Index{0});
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Index> kept;
  kept.reserve(static_cast<std::size_t>(n));
  std::int64_t drawn = 0;
  while (static_cast<Index>(kept.size()) < n) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index i : order) {
      if (++drawn > kCandidateCap) {
        throw Error(ErrorKind::kGenerationFailure, "biased resampling exceeded the candidate cap");
      }
      if (coin(rng) < (match[i] ? r : 1.0 - r)) {
        kept.push_back(i);
        if (static_cast<Index>(kept.size()) == n) break;
      }
    }
  }
  return pool.select_rows(kept);
}

BinaryDataset bias_select_yv(const BinaryDataset& pool, const StableSplit& split, double r, Index n,
                             std::mt19937_64& rng, Index count) {
  return resample_biased(pool, bias_match_yv(pool, split, count), r, n, rng);
}

BinaryDataset bias_select_vs(const BinaryDataset& pool, const StableSplit& split, double r, Index n,
                             std::mt19937_64& rng, Index count) {
  return resample_biased(pool, bias_match_vs(pool, split, count), r, n, rng);
}

BinaryDataset generate_environment(const GenSpec& spec, double r, std::uint64_t seed) {
  spec.validate();
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::kConfig, "bias rate r must lie in (0, 1)");
  const StableSplit split = spec.split();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Matrix x(spec.n, spec.p);
  Vector y(spec.n);
  Index kept = 0;
  std::int64_t drawn = 0;
  while (kept < spec.n) {
    if (drawn >= kCandidateCap) {
      throw Error(ErrorKind::kGenerationFailure, "generation exceeded the candidate cap");
    }
    const Index rows = std::min<Index>(kChunkRows, kCandidateCap - drawn);
    drawn += rows;
    Matrix fx = gen_features(spec, rows, rng);
    Vector fy = gen_outcome(fx, split, spec.outcome_mode, rng);
    const BinaryDataset chunk(std::move(fx), std::move(fy));
    const auto match = spec.bias_mode == BiasMode::kYGivenV
                           ? bias_match_yv(chunk, split, spec.bias_count())
                           : bias_match_vs(chunk, split, spec.bias_count());
    for (Index i = 0; i < rows && kept < spec.n; ++i) {
      if (coin(rng) < (match[i] ? r : 1.0 - r)) {
        x.row(kept) = chunk.features().row(i);
        y(kept) = chunk.outcome()(i);
        ++kept;
      }
    }
  }
  return BinaryDataset(std::move(x), std::move(y));
}

std::string rate_label(double r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "r=%.4g", r);
  return buf;
}

std::vector<double> default_test_rates() {
  std::vector<double> rates;
  for (int k = 0; k < 8; ++k) rates.push_back((15 + 10 * k) / 100.0);
  return rates;
}

EnvironmentSuite make_suite(const GenSpec& spec, const std::vector<double>& test_rates) {
  spec.validate();
  const std::uint64_t train_seed = derive_seed(spec.seed, "train");
  EnvironmentSuite suite{generate_environment(spec, spec.r, train_seed), {}, {}};
  suite.provenance["spec"] = nlohmann::json::parse(to_json(spec)).dump();
  suite.provenance["seed.train"] = std::to_string(train_seed);
  for (double r : test_rates) {
    const std::string label = rate_label(r);
    const std::uint64_t seed = derive_seed(spec.seed, label);
    suite.tests.emplace_back(label, generate_environment(spec, r, seed));
    suite.provenance["seed." + label] = std::to_string(seed);
  }
  suite.validate();
  return suite;
}

std::string to_json(const GenSpec& spec) {
  nlohmann::json j{{"setting", setting_name(spec.setting)},
                   {"n", spec.n},
                   {"p", spec.p},
                   {"r", spec.r},
                   {"outcome_mode", outcome_mode_name(spec.outcome_mode)},
                   {"bias_mode", bias_mode_name(spec.bias_mode)},
                   {"seed", spec.seed},
                   {"bias_features", spec.bias_features}};
  return j.dump(2);
}

GenSpec gen_spec_from_json(const std::string& text) {
  using nlohmann::json;
  GenSpec s;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorKind::kConfig, "generator spec must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      static const std::vector<std::string> known{"setting", "n", "p", "r", "outcome_mode",
                                                  "bias_mode", "seed", "bias_features"};
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw Error(ErrorKind::kConfig, "unknown generator field '" + key + "'");
      }
    }
    if (j.contains("setting")) s.setting = parse_setting(j["setting"].get<std::string>());
    s.n = j.value("n", s.n);
    s.p = j.value("p", s.p);
    s.r = j.value("r", s.r);
    if (j.contains("outcome_mode")) s.outcome_mode = parse_outcome_mode(j["outcome_mode"].get<std::string>());
    if (j.contains("bias_mode")) s.bias_mode = parse_bias_mode(j["bias_mode"].get<std::string>());
    s.seed = j.value("seed", s.seed);
    s.bias_features = j.value("bias_features", s.bias_features);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("bad generator spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace dgbr

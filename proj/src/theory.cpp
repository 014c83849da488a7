#include "dgbr/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include <gmpxx.h>
#include <json.hpp>

#include "dgbr/error.hpp"

namespace dgbr {

namespace {

constexpr mp_bitcnt_t kPrecisionBits = 512;

mpq_class alpha_exact(int p, std::int64_t m) {
  const mpz_class half = mpz_class(1) << (p - 1);     // 2^(p-1)
  const mpz_class quarter = mpz_class(1) << (p - 2);  // 2^(p-2)
  const mpz_class mm(static_cast<long>(m));
  if (m == 0) return 0;
  if (mm <= quarter) return mpq_class(quarter, half - mm) - mpq_class(1, 2);
  if (mm < half) return 1 - mpq_class(half - mm, 3 * quarter - mm);
  return 1;
}

}  // namespace

double alpha_from_m(int p, std::int64_t m) {
  if (p < 2 || p > 62) throw Error(ErrorKind::kDomain, "alpha_from_m: p must lie in [2, 62]");
  const std::int64_t cells = std::int64_t{1} << p;
  if (m < 0 || m >= cells) {
    throw Error(ErrorKind::kDomain, "alpha_from_m: m must lie in [0, 2^p - 1]");
  }
  mpq_class a = alpha_exact(p, m);
  a.canonicalize();
  return a.get_d();
}

double expected_alpha(std::int64_t n, int p) {
  if (p < 2) throw Error(ErrorKind::kDomain, "expected_alpha: p must be >= 2");
  if (p > kExpectedAlphaMaxP) {
    throw Error(ErrorKind::kUnsupportedDimension, "expected_alpha: p above " +
                                                      std::to_string(kExpectedAlphaMaxP));
  }
  if (n < 1) throw Error(ErrorKind::kDomain, "expected_alpha: n must be >= 1");

  const unsigned long cells = 1ul << p;
  const auto nn = static_cast<unsigned long>(n);
  // Index the sum by k = 2^p - 1 - m: term_k = C(2^p, k+1) C(n-1, k) g(p, m).
  mpz_class choose_cells = cells;  // C(2^p, 1)
  mpz_class choose_n = 1;          // C(n-1, 0)
  mpf_class sum(0, kPrecisionBits);
  const unsigned long last = std::min<unsigned long>(nn - 1, cells - 1);
  for (unsigned long k = 0; k <= last; ++k) {
    if (k > 0) {
      choose_cells *= cells - k;
      choose_cells /= k + 1;
      choose_n *= nn - k;
      choose_n /= k;
    }
    const auto m = static_cast<std::int64_t>(cells - 1 - k);
    mpq_class g = alpha_exact(p, m);
    g.canonicalize();
    if (g == 0) continue;
    mpf_class term(choose_cells * choose_n, kPrecisionBits);
    term *= mpf_class(g, kPrecisionBits);
    sum += term;
  }
  mpz_class total;
  mpz_bin_uiui(total.get_mpz_t(), nn + cells - 1, cells - 1);
  mpf_class ratio(sum / mpf_class(total, kPrecisionBits), kPrecisionBits);
  // get_d truncates; going through 40 decimal digits rounds to nearest
  mp_exp_t exp10 = 0;
  const std::string digits = ratio.get_str(exp10, 10, 40);
  if (digits.empty()) return 0.0;
  const std::string text = "0." + digits + "e" + std::to_string(exp10);
  return std::min(1.0, std::strtod(text.c_str(), nullptr));
}

double layer_norm_cap(double lambda7, double bias_cap) {
  return std::sqrt(lambda7 + bias_cap * bias_cap);
}

void BoundInputs::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::kDomain, "delta must lie in (0, 1)");
  if (n < 1 || p < 1 || K < 0) throw Error(ErrorKind::kDomain, "need n >= 1, p >= 1, K >= 0");
  if (layer_sizes.size() != static_cast<std::size_t>(K) + 1) {
    throw Error(ErrorKind::kShape, "layer_sizes must list l_0..l_K");
  }
  if (layer_sizes.front() != p) throw Error(ErrorKind::kShape, "layer_sizes[0] must equal p");
  for (Index l : layer_sizes) {
    if (l < 1) throw Error(ErrorKind::kDomain, "layer sizes must be positive");
  }
  if (bias_caps.size() != static_cast<std::size_t>(K)) {
    throw Error(ErrorKind::kShape, "bias_caps must hold one cap per layer");
  }
  for (double m : bias_caps) {
    if (!(m >= 0.0)) throw Error(ErrorKind::kDomain, "bias caps must be >= 0");
  }
  for (double v : {lambda4, lambda5, lambda7, loss_sup, epsilon_l1}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::kDomain, "lambdas, loss_sup and epsilon_l1 must be finite and >= 0");
    }
  }
}

RiskBound risk_bound(const BoundInputs& b) {
  b.validate();
  const double nd = static_cast<double>(b.n);
  auto width = [&](int k) { return static_cast<double>(b.layer_sizes[static_cast<std::size_t>(k)] + 1); };

  double prod = 1.0;
  for (int k = 1; k <= b.K; ++k) {
    prod *= layer_norm_cap(b.lambda7, b.bias_caps[static_cast<std::size_t>(k - 1)]) * std::sqrt(width(k - 1));
  }
  RiskBound r;
  r.complexity = std::ldexp(1.0, b.K + 3) * std::sqrt(2.0 * std::log(2.0 * b.p) / nd) *
                 std::min(std::sqrt(b.lambda4 * width(b.K)), b.lambda5) * prod;
  r.confidence = 3.0 * std::sqrt(std::log(2.0 / b.delta) / (2.0 * nd));
  r.imbalance = 2.0 * b.loss_sup * b.epsilon_l1;
  r.total = r.complexity + r.confidence + r.imbalance;
  return r;
}

BoundInputs bound_inputs_from_json(const std::string& text) {
  using nlohmann::json;
  BoundInputs b;
  try {
    const json j = json::parse(text);
    b.n = j.at("n").get<std::int64_t>();
    b.p = j.at("p").get<int>();
    b.K = j.at("K").get<int>();
    b.layer_sizes = j.at("layer_sizes").get<std::vector<Index>>();
    b.lambda4 = j.at("lambda4").get<double>();
    b.lambda5 = j.at("lambda5").get<double>();
    b.lambda7 = j.at("lambda7").get<double>();
    b.bias_caps = j.at("bias_caps").get<std::vector<double>>();
    b.delta = j.at("delta").get<double>();
    b.loss_sup = j.at("loss_sup").get<double>();
    b.epsilon_l1 = j.at("epsilon_l1").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("bad bound inputs: ") + e.what());
  }
  b.validate();
  return b;
}

std::string to_json(const RiskBound& bound) {
  nlohmann::json j{{"complexity", bound.complexity},
                   {"confidence", bound.confidence},
                   {"imbalance", bound.imbalance},
                   {"total", bound.total}};
  return j.dump(2);
}

}  // namespace dgbr

#include <doctest.h>

#include <cmath>

#include "dgbr/error.hpp"
#include "dgbr/theory.hpp"
#include "oracles.hpp"

using namespace dgbr;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

BoundInputs reference_inputs() {
  BoundInputs b;
  b.n = 1000;
  b.p = 20;
  b.K = 2;
  b.layer_sizes = {20, 10, 5};
  b.lambda4 = 1.0;
  b.lambda5 = 10.0;
  b.lambda7 = 1.0;
  b.bias_caps = {1.0, 1.0};
  b.delta = 0.05;
  b.loss_sup = 5.0;
  b.epsilon_l1 = 0.01;
  return b;
}

}  // namespace

TEST_CASE("alpha_from_m examples") {
  CHECK(alpha_from_m(3, 0) == 0.0);
  CHECK(alpha_from_m(3, 2) == doctest::Approx(0.5));
  CHECK(alpha_from_m(3, 3) == doctest::Approx(2.0 / 3.0));
  CHECK(alpha_from_m(3, 4) == 1.0);
  CHECK(alpha_from_m(3, 7) == 1.0);
}

TEST_CASE("alpha_from_m matches the extremal enumeration") {
  for (int p : {2, 3}) {
    for (int m = 0; m < (1 << p); ++m) {
      CAPTURE(p);
      CAPTURE(m);
      CHECK(alpha_from_m(p, m) == doctest::Approx(oracle::brute_alpha(p, m)).epsilon(1e-12));
    }
  }
}

TEST_CASE("alpha_from_m is monotone and continuous at the case boundary") {
  for (int p = 2; p <= 8; ++p) {
    double prev = -1.0;
    for (std::int64_t m = 0; m < (std::int64_t{1} << p); ++m) {
      const double a = alpha_from_m(p, m);
      CHECK(a >= prev);
      CHECK(a <= 1.0);
      prev = a;
    }
  }
  // case 2 evaluated at m = 2^(p-2) equals case 3 there
  for (int p = 3; p <= 10; ++p) {
    const double m = std::ldexp(1.0, p - 2);
    const double case2 = std::ldexp(1.0, p - 2) / (std::ldexp(1.0, p - 1) - m) - 0.5;
    CHECK(alpha_from_m(p, static_cast<std::int64_t>(m)) == doctest::Approx(case2));
  }
}

TEST_CASE("alpha_from_m domain") {
  CHECK(kind_of([] { alpha_from_m(3, 8); }) == ErrorKind::kDomain);
  CHECK(kind_of([] { alpha_from_m(3, -1); }) == ErrorKind::kDomain);
  CHECK(kind_of([] { alpha_from_m(1, 0); }) == ErrorKind::kDomain);
}

TEST_CASE("expected_alpha examples") {
  CHECK(expected_alpha(1, 2) == 1.0);
  CHECK(kind_of([] { expected_alpha(10, 21); }) == ErrorKind::kUnsupportedDimension);
  CHECK(kind_of([] { expected_alpha(0, 3); }) == ErrorKind::kDomain);
}

TEST_CASE("expected_alpha matches the composition Monte Carlo") {
  for (auto [n, p] : {std::pair{10, 2}, std::pair{50, 3}}) {
    const auto mc = oracle::composition_alpha(n, p, 100000, 1234 + n,
                                              [p](int m) { return oracle::brute_alpha(p, m); });
    const double exact = expected_alpha(n, p);
    CAPTURE(n);
    CHECK(std::abs(exact - mc.mean) < 3.0 * mc.std_error);
  }
}

TEST_CASE("expected_alpha trends") {
  for (int p : {3, 4}) {
    double prev = 2.0;
    for (std::int64_t n : {10, 100, 1000, 10000}) {
      const double a = expected_alpha(n, p);
      CHECK(a < prev);
      CHECK(a >= 0.0);
      prev = a;
    }
  }
  for (std::int64_t n : {10, 100, 1000}) {
    double prev = -1.0;
    for (int p = 2; p <= 8; ++p) {
      const double a = expected_alpha(n, p);
      // strict until the value saturates at 1
      if (prev < 1.0) CHECK(a > prev);
      CHECK(a >= prev);
      prev = a;
    }
  }
}

TEST_CASE("risk bound pieces") {
  CHECK(layer_norm_cap(3.0, 1.0) == doctest::Approx(2.0));
  BoundInputs b = reference_inputs();
  b.epsilon_l1 = 0.0;
  CHECK(risk_bound(b).imbalance == 0.0);
  b.delta = 1.0;
  CHECK(kind_of([&] { risk_bound(b); }) == ErrorKind::kDomain);
}

TEST_CASE("risk bound agrees with an independent recomputation") {
  const RiskBound r = risk_bound(reference_inputs());
  // widths carry one extra unit for the bias: 21, 11, 6
  const double b_k = std::sqrt(1.0 + 1.0);
  const double complexity = std::pow(2.0, 5) * std::sqrt(2.0 * std::log(40.0) / 1000.0) *
                            std::min(std::sqrt(1.0 * 6.0), 10.0) * (b_k * std::sqrt(21.0)) *
                            (b_k * std::sqrt(11.0));
  const double confidence = 3.0 * std::sqrt(std::log(2.0 / 0.05) / 2000.0);
  const double imbalance = 2.0 * 5.0 * 0.01;
  CHECK(r.complexity == doctest::Approx(complexity).epsilon(1e-12));
  CHECK(r.confidence == doctest::Approx(confidence).epsilon(1e-12));
  CHECK(r.imbalance == doctest::Approx(imbalance).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(complexity + confidence + imbalance).epsilon(1e-12));
}

TEST_CASE("risk bound monotonicity") {
  const double base = risk_bound(reference_inputs()).total;
  auto with = [](auto mutate) {
    BoundInputs b = reference_inputs();
    mutate(b);
    return risk_bound(b).total;
  };
  CHECK(with([](BoundInputs& b) { b.lambda4 *= 2; }) >= base);
  CHECK(with([](BoundInputs& b) { b.lambda5 *= 2; }) >= base);
  CHECK(with([](BoundInputs& b) { b.lambda7 *= 2; }) >= base);
  CHECK(with([](BoundInputs& b) { b.loss_sup *= 2; }) >= base);
  CHECK(with([](BoundInputs& b) { b.epsilon_l1 *= 2; }) >= base);
  CHECK(with([](BoundInputs& b) { b.n *= 2; }) <= base);
  CHECK(with([](BoundInputs& b) { b.delta = 0.1; }) <= base);
}

TEST_CASE("bound inputs from JSON") {
  const BoundInputs b = bound_inputs_from_json(
      R"({"n": 1000, "p": 20, "K": 2, "layer_sizes": [20, 10, 5], "lambda4": 1, "lambda5": 10,
          "lambda7": 1, "bias_caps": [1, 1], "delta": 0.05, "loss_sup": 5, "epsilon_l1": 0.01})");
  CHECK(risk_bound(b).total == doctest::Approx(risk_bound(reference_inputs()).total));
  CHECK_THROWS_AS(bound_inputs_from_json(R"({"n": 10, "p": 3, "K": 1, "layer_sizes": [3]})"), Error);
  CHECK(to_json(risk_bound(b)).find("complexity") != std::string::npos);
}

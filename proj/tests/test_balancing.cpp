#include <doctest.h>

#include <random>

#include "dgbr/balancing.hpp"
#include "dgbr/error.hpp"
#include "oracles.hpp"

using namespace dgbr;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(r.size(), r.begin()->size());
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix factorial(int p, int copies = 1) {
  Matrix x((1 << p) * copies, p);
  for (int c = 0; c < (1 << p) * copies; ++c)
    for (int j = 0; j < p; ++j) x(c, j) = ((c % (1 << p)) >> j) & 1;
  return x;
}

Matrix random_binary(Index n, Index p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = coin(rng);
  return x;
}

Vector random_positive(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 1.5);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace

TEST_CASE("balancing loss examples") {
  CHECK(balancing_loss(factorial(2), SampleWeights::uniform(4)) == doctest::Approx(0.0));
  const Matrix x = rows({{1, 1}, {1, 1}, {0, 0}, {1, 0}});
  CHECK(balancing_loss(x, SampleWeights::uniform(4)) == doctest::Approx(25.0 / 36.0).epsilon(1e-14));
  CHECK(oracle::balancing_loss(x, Vector::Ones(4)) == doctest::Approx(25.0 / 36.0).epsilon(1e-14));
  CHECK(balancing_loss(rows({{1}, {0}, {1}}), SampleWeights::uniform(3)) == 0.0);
}

TEST_CASE("balancing loss matches the enumeration oracle") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = random_binary(30, 5, rng);
    const Vector w = random_positive(30, rng);
    const double lib = balancing_loss(x, SampleWeights::from_weights(w));
    CHECK(lib == doctest::Approx(oracle::balancing_loss(x, w)).epsilon(1e-12));
  }
}

TEST_CASE("embedded balancing zeroes the treatment column before embedding") {
  std::mt19937_64 rng(5);
  const Matrix x = random_binary(25, 4, rng);
  const Vector w = random_positive(25, rng);
  Matrix proj(4, 3);
  proj.setRandom();
  const RowEmbedding embed = [&](const Matrix& m) { return Matrix(m * proj); };
  std::vector<Matrix> cov;
  for (Index j = 0; j < 4; ++j) {
    Matrix z = x;
    z.col(j).setZero();
    cov.push_back(z * proj);
  }
  CHECK(balancing_loss(x, SampleWeights::from_weights(w), embed) ==
        doctest::Approx(oracle::balancing_loss(x, w, &cov)).epsilon(1e-12));
}

TEST_CASE("balancing loss is scale invariant") {
  std::mt19937_64 rng(3);
  const Matrix x = random_binary(40, 5, rng);
  const Vector w = random_positive(40, rng);
  const double a = balancing_loss(x, SampleWeights::from_weights(w));
  const double b = balancing_loss(x, SampleWeights::from_weights(7.5 * w));
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("degenerate columns are skipped and reported") {
  const Matrix x = rows({{1, 0, 1}, {1, 1, 0}, {1, 0, 0}});
  const BalanceTerms t = balancing_terms(x, Vector::Ones(3));
  REQUIRE(t.degenerate.size() == 1);
  CHECK(t.degenerate[0] == 0);
  CHECK(t.per_treatment(0) == 0.0);
  CHECK(t.total == doctest::Approx(t.per_treatment.sum()));
}

TEST_CASE("balancing gradient matches finite differences") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = random_binary(20, 6, rng);
    const Vector omega = random_positive(20, rng);
    const Vector g = balancing_loss_grad_w(x, SampleWeights{omega});
    const Vector fd = oracle::central_diff(
        [&](const Vector& o) { return oracle::balancing_loss(x, o.array().square().matrix()); }, omega);
    for (Index i = 0; i < g.size(); ++i) CHECK(oracle::rel_error(g(i), fd(i)) < 1e-4);
  }
}

TEST_CASE("balancing gradient on the two-point instance") {
  const Matrix x = rows({{0, 1}, {1, 0}});
  const Vector omega = Vector::Ones(2);
  const Vector g = balancing_loss_grad_w(x, SampleWeights{omega});
  const Vector fd = oracle::central_diff(
      [&](const Vector& o) { return oracle::balancing_loss(x, o.array().square().matrix()); }, omega);
  CHECK((g - fd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gradient vanishes at the balanced factorial") {
  const Vector g = balancing_loss_grad_w(factorial(3), SampleWeights::uniform(8));
  CHECK(g.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("raw Gram-matrix path agrees with the explicit path") {
  std::mt19937_64 rng(8);
  const Matrix x = random_binary(50, 5, rng);
  const Vector w = random_positive(50, rng);
  std::vector<Matrix> cov;
  for (Index j = 0; j < 5; ++j) {
    Matrix c(50, 4);
    Index k = 0;
    for (Index c2 = 0; c2 < 5; ++c2)
      if (c2 != j) c.col(k++) = x.col(c2);
    cov.push_back(c);
  }
  const BalanceGradient a = raw_balance_with_gradient(x, w);
  const BalanceGradient b = balance_with_gradient(x, w, cov, false);
  CHECK(a.terms.total == doctest::Approx(b.terms.total).epsilon(1e-12));
  CHECK((a.d_weights - b.d_weights).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exact balancing weights") {
  CHECK(exact_balancing_weights(factorial(2)).weights() == Vector::Constant(4, 4.0));
  const Vector w = exact_balancing_weights(rows({{0, 0}, {0, 0}, {0, 1}, {1, 0}})).weights();
  CHECK(w(0) == doctest::Approx(2.0));
  CHECK(w(1) == doctest::Approx(2.0));
  CHECK(w(2) == doctest::Approx(4.0));
  CHECK(w(3) == doctest::Approx(4.0));
  CHECK(balancing_loss(rows({{0, 0}, {0, 0}, {0, 1}, {1, 0}}), SampleWeights::from_weights(w)) > 0.1);
}

TEST_CASE("exact weights balance every full-support design") {
  std::mt19937_64 rng(4);
  for (int p = 2; p <= 4; ++p) {
    // full factorial plus random extra rows keeps full support with uneven counts
    Matrix x(factorial(p).rows() + 40, p);
    x << factorial(p), random_binary(40, p, rng);
    const SampleWeights w = exact_balancing_weights(x);
    CHECK(balancing_loss(x, w) < 1e-10);
    const PatternTable eps = imbalance_epsilon(x, w.weights());
    for (double e : eps.values()) CHECK(std::abs(e) < 1e-12);
  }
}

TEST_CASE("max imbalance examples") {
  CHECK(max_imbalance(factorial(3), Vector::Ones(8)) == doctest::Approx(0.0));
  CHECK(max_imbalance(rows({{1, 1}, {0, 0}}), Vector::Ones(2)) == doctest::Approx(1.0));
  CHECK(max_imbalance(rows({{1, 1}, {1, 0}}), Vector::Ones(2)) == 1.0);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    const Matrix x = random_binary(15, 4, rng);
    const Vector w = random_positive(15, rng);
    const double a = max_imbalance(x, w);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(a == doctest::Approx(oracle::max_imbalance(x, w)).epsilon(1e-12));
  }
}

TEST_CASE("missing pattern count") {
  CHECK(missing_pattern_count(factorial(3)) == 0);
  CHECK(missing_pattern_count(rows({{1, 0}})) == 3);
  CHECK(missing_pattern_count(rows({{0, 0}, {0, 1}, {0, 1}})) == 2);
  try {
    missing_pattern_count(Matrix::Zero(1, kPatternCap + 1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnsupportedDimension);
  }
}

TEST_CASE("epsilon examples") {
  const PatternTable f = imbalance_epsilon(factorial(2), Vector::Ones(4));
  for (double e : f.values()) CHECK(std::abs(e) < 1e-15);
  const PatternTable d = imbalance_epsilon(rows({{0, 0}, {1, 1}}), Vector::Ones(2));
  CHECK(d.at("00") == doctest::Approx(0.25));
  CHECK(d.at("11") == doctest::Approx(0.25));
  CHECK(d.at("01") == doctest::Approx(-0.25));
  CHECK(d.at("10") == doctest::Approx(-0.25));
  try {
    imbalance_epsilon(rows({{0, 0}, {1, 1}}), Vector::Zero(2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidWeights);
  }
}

TEST_CASE("pattern keys list feature 1 first") {
  const Matrix x = rows({{1, 0, 0}});
  CHECK(pattern_key(pattern_codes(x)[0], 3) == "100");
}

TEST_CASE("epsilon sums to zero") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const Index p = 2 + t % 5;
    const Matrix x = random_binary(30, p, rng);
    const Vector w = random_positive(30, rng);
    CHECK(std::abs(imbalance_epsilon(x, w).sum()) < 1e-12);
  }
}

TEST_CASE("imbalance report is consistent") {
  std::mt19937_64 rng(2);
  const Matrix x = random_binary(40, 4, rng);
  const Vector w = random_positive(40, rng);
  const ImbalanceReport r = imbalance_report(x, w);
  CHECK(r.total_loss == doctest::Approx(r.per_treatment_loss.sum()));
  CHECK(r.max_imbalance_alpha <= 1.0);
  REQUIRE(r.missing_pattern_count_m.has_value());
  REQUIRE(r.epsilon_by_pattern.has_value());
  const ImbalanceReport capped = imbalance_report(x, w, 3);
  CHECK_FALSE(capped.missing_pattern_count_m.has_value());
  CHECK(to_json(r).find("epsilon") != std::string::npos);
}

TEST_CASE("interaction expansion appends pairwise products") {
  const Matrix x = rows({{1, 1, 0}, {1, 0, 1}});
  const Matrix e = with_interactions(x);
  REQUIRE(e.cols() == 6);
  CHECK(e(0, 3) == 1.0);
  CHECK(e(0, 4) == 0.0);
  CHECK(e(1, 4) == 1.0);
  CHECK(e(1, 5) == 0.0);
}

TEST_CASE("sample weights validation") {
  CHECK_THROWS_AS(SampleWeights::from_weights(Vector::Constant(2, -1.0)), Error);
  const SampleWeights w = SampleWeights::from_weights(Vector::Constant(3, 4.0));
  CHECK(w.omega(0) == doctest::Approx(2.0));
}

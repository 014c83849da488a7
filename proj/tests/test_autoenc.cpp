#include <doctest.h>

#include <random>

#include "dgbr/autoenc.hpp"
#include "dgbr/error.hpp"
#include "oracles.hpp"

using namespace dgbr;

namespace {

Matrix random_binary(Index n, Index p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = coin(rng);
  return x;
}

// Flattens every parameter block so finite differences can walk it.
std::vector<double*> slots(AutoEncoderParams& p) {
  std::vector<double*> out;
  auto add = [&](auto& m) {
    for (Index i = 0; i < m.size(); ++i) out.push_back(m.data() + i);
  };
  for (std::size_t k = 0; k < p.enc_w.size(); ++k) {
    add(p.enc_w[k]);
    add(p.enc_b[k]);
    add(p.dec_w[k]);
    add(p.dec_b[k]);
  }
  return out;
}

}  // namespace

TEST_CASE("sigmoid identities") {
  CHECK(sigmoid(0.0) == 0.5);
  for (double x : {0.1, 1.0, 3.7, 12.0}) CHECK(std::abs(sigmoid(-x) - (1.0 - sigmoid(x))) < 1e-15);
}

TEST_CASE("zero parameters encode and decode to one half") {
  const AutoEncoderParams z = AutoEncoderParams::zeros({4, 3});
  Vector x(4);
  x << 1, 0, 1, 1;
  CHECK(encode(z, x) == Vector::Constant(3, 0.5));
  CHECK(decode(z, Vector::Constant(3, 0.2)) == Vector::Constant(4, 0.5));
}

TEST_CASE("identity first layer on a zero input") {
  AutoEncoderParams a = AutoEncoderParams::zeros({3, 3});
  a.enc_w[0] = Matrix::Identity(3, 3);
  CHECK(encode(a, Vector::Zero(3)) == Vector::Constant(3, 0.5));
}

TEST_CASE("outputs stay inside the unit interval") {
  std::mt19937_64 rng(1);
  const AutoEncoderParams a = AutoEncoderParams::random({6, 4, 2}, rng);
  const Matrix x = random_binary(30, 6, rng);
  const Matrix h = encode_batch(a, x);
  const Matrix r = decode_batch(a, h);
  CHECK(h.cols() == 2);
  CHECK(r.cols() == 6);
  CHECK(h.minCoeff() > 0.0);
  CHECK(h.maxCoeff() < 1.0);
  CHECK(r.minCoeff() > 0.0);
  CHECK(r.maxCoeff() < 1.0);
  AutoEncoderParams big = a;
  big.enc_w[0] *= 1e6;
  CHECK(encode_batch(big, x).allFinite());
}

TEST_CASE("shape errors") {
  const AutoEncoderParams a = AutoEncoderParams::zeros({4, 3});
  try {
    encode(a, Vector::Zero(5));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kShape);
  }
  CHECK_THROWS_AS(decode(a, Vector::Zero(4)), Error);
  CHECK_THROWS_AS(autoenc_grads(a, Matrix::Zero(2, 4), Vector::Ones(2), Matrix::Zero(2, 2), 1, 1), Error);
}

TEST_CASE("default layer sizes and initialisation range") {
  CHECK(default_layer_sizes(20) == std::vector<Index>{20, 10, 5});
  CHECK(default_layer_sizes(5) == std::vector<Index>{5, 3, 2});
  CHECK(default_layer_sizes(3, 3) == std::vector<Index>{3, 2, 2, 2});
  std::mt19937_64 rng(3);
  const AutoEncoderParams a = AutoEncoderParams::random({10, 5}, rng);
  const double r = std::sqrt(6.0 / 15.0);
  CHECK(a.enc_w[0].cwiseAbs().maxCoeff() <= r);
  CHECK(a.enc_b[0].isZero());
}

TEST_CASE("reconstruction loss weights rows by W squared") {
  // a one-layer decoder that outputs 0.5 everywhere
  const AutoEncoderParams z = AutoEncoderParams::zeros({2, 1});
  Matrix x(1, 2);
  x << 1, 0;
  CHECK(recon_loss(z, x, Vector::Constant(1, 2.0)) == doctest::Approx(2.0));
  CHECK(recon_loss(z, x, Vector::Zero(1)) == 0.0);
}

TEST_CASE("column-dropped encodings match zeroing the column") {
  std::mt19937_64 rng(6);
  const AutoEncoderParams a = AutoEncoderParams::random({5, 3, 2}, rng);
  const Matrix x = random_binary(12, 5, rng);
  const auto codes = encode_column_dropped_codes(a, x);
  const auto traces = encode_column_dropped(a, x);
  for (Index j = 0; j < 5; ++j) {
    Matrix z = x;
    z.col(j).setZero();
    const Matrix want = encode_batch(a, z);
    CHECK((codes[j] - want).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((traces[j].code() - want).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("autoencoder gradients match finite differences") {
  std::mt19937_64 rng(42);
  const Index n = 10;
  AutoEncoderParams a = AutoEncoderParams::random({5, 4, 3}, rng);
  for (auto& b : a.enc_b) b.setRandom();
  for (auto& b : a.dec_b) b.setRandom();
  const Matrix x = random_binary(n, 5, rng);
  const Vector w = Vector::Random(n).cwiseAbs() + Vector::Constant(n, 0.2);
  const Matrix up = Matrix::Random(n, 3);
  const double l2 = 0.7, l7 = 0.3;
  auto loss = [&](const AutoEncoderParams& q) {
    return up.cwiseProduct(encode_batch(q, x)).sum() + l2 * recon_loss(q, x, w) +
           l7 * q.weight_squared_norm();
  };
  AutoEncoderParams g = autoenc_grads(a, x, w, up, l2, l7);
  auto ps = slots(a);
  auto gs = slots(g);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double keep = *ps[i];
    *ps[i] = keep + 1e-5;
    const double f1 = loss(a);
    *ps[i] = keep - 1e-5;
    const double f0 = loss(a);
    *ps[i] = keep;
    CHECK(oracle::rel_error(*gs[i], (f1 - f0) / 2e-5) < 1e-4);
  }
}

TEST_CASE("zero upstream and no reconstruction leaves only the ridge term") {
  std::mt19937_64 rng(7);
  const AutoEncoderParams a = AutoEncoderParams::random({4, 3}, rng);
  const Matrix x = random_binary(6, 4, rng);
  const AutoEncoderParams g = autoenc_grads(a, x, Vector::Ones(6), Matrix::Zero(6, 3), 0.0, 0.5);
  CHECK((g.enc_w[0] - a.enc_w[0]).norm() < 1e-15);
  CHECK(g.enc_b[0].isZero());
  CHECK(g.dec_b[0].isZero());
  const AutoEncoderParams none = autoenc_grads(a, x, Vector::Ones(6), Matrix::Zero(6, 3), 0.0, 0.0);
  CHECK(none.dot(none) == 0.0);
}

TEST_CASE("decoder gradients ignore the upstream signal") {
  std::mt19937_64 rng(9);
  const AutoEncoderParams a = AutoEncoderParams::random({4, 3, 2}, rng);
  const Matrix x = random_binary(8, 4, rng);
  const AutoEncoderParams g0 = autoenc_grads(a, x, Vector::Ones(8), Matrix::Zero(8, 2), 1.0, 0.1);
  const AutoEncoderParams g1 = autoenc_grads(a, x, Vector::Ones(8), Matrix::Random(8, 2), 1.0, 0.1);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(g0.dec_w[k] == g1.dec_w[k]);
    CHECK(g0.dec_b[k] == g1.dec_b[k]);
  }
}

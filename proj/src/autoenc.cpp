#include "dgbr/autoenc.hpp"

#include <algorithm>
#include <cmath>

#include "dgbr/error.hpp"

namespace dgbr {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

Matrix activate(Matrix pre) {
  auto z = pre.array().max(-kActivationClamp).min(kActivationClamp);
  pre = ((-z).exp() + 1.0).inverse().matrix();
  return pre;
}

Matrix dense_layer(const Matrix& in, const Matrix& w, const Vector& b) {
  Matrix pre = in * w.transpose();
  pre.rowwise() += b.transpose();
  return activate(std::move(pre));
}

void check_sizes(const std::vector<Index>& sizes) {
  if (sizes.empty()) throw Error(ErrorKind::kShape, "layer_sizes must contain l_0");
  for (Index s : sizes) {
    if (s < 1) throw Error(ErrorKind::kShape, "layer sizes must be positive");
  }
}

// sigma'(z) expressed through the activation a = sigma(z)
Matrix sigmoid_slope(const Matrix& a) { return (a.array() * (1.0 - a.array())).matrix(); }

}  // namespace

AutoEncoderParams AutoEncoderParams::zeros(std::vector<Index> layer_sizes) {
  check_sizes(layer_sizes);
  AutoEncoderParams params;
  params.layer_sizes = std::move(layer_sizes);
  const auto& l = params.layer_sizes;
  for (std::size_t k = 1; k < l.size(); ++k) {
    params.enc_w.push_back(Matrix::Zero(l[k], l[k - 1]));
    params.enc_b.push_back(Vector::Zero(l[k]));
    params.dec_w.push_back(Matrix::Zero(l[k - 1], l[k]));
    params.dec_b.push_back(Vector::Zero(l[k - 1]));
  }
  return params;
}

AutoEncoderParams AutoEncoderParams::random(std::vector<Index> layer_sizes, std::mt19937_64& rng) {
  AutoEncoderParams params = zeros(std::move(layer_sizes));
  const auto& l = params.layer_sizes;
  for (std::size_t k = 1; k < l.size(); ++k) {
    const double r = std::sqrt(6.0 / static_cast<double>(l[k] + l[k - 1]));
    std::uniform_real_distribution<double> dist(-r, r);
    auto fill = [&](Matrix& m) {
      // explicit loop order so the draw sequence does not depend on storage order
      for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
    };
    fill(params.enc_w[k - 1]);
    fill(params.dec_w[k - 1]);
  }
  return params;
}

void AutoEncoderParams::add_scaled(const AutoEncoderParams& other, double scale) {
  for (std::size_t k = 0; k < enc_w.size(); ++k) {
    enc_w[k] += scale * other.enc_w[k];
    enc_b[k] += scale * other.enc_b[k];
    dec_w[k] += scale * other.dec_w[k];
    dec_b[k] += scale * other.dec_b[k];
  }
}

double AutoEncoderParams::dot(const AutoEncoderParams& other) const {
  double s = 0.0;
  for (std::size_t k = 0; k < enc_w.size(); ++k) {
    s += enc_w[k].cwiseProduct(other.enc_w[k]).sum() + enc_b[k].dot(other.enc_b[k]) +
         dec_w[k].cwiseProduct(other.dec_w[k]).sum() + dec_b[k].dot(other.dec_b[k]);
  }
  return s;
}

double AutoEncoderParams::weight_squared_norm() const {
  double s = 0.0;
  for (std::size_t k = 0; k < enc_w.size(); ++k) {
    s += enc_w[k].squaredNorm() + dec_w[k].squaredNorm();
  }
  return s;
}

bool AutoEncoderParams::all_finite() const {
  for (std::size_t k = 0; k < enc_w.size(); ++k) {
    if (!enc_w[k].allFinite() || !enc_b[k].allFinite() || !dec_w[k].allFinite() ||
        !dec_b[k].allFinite()) {
      return false;
    }
  }
  return true;
}

std::vector<Index> default_layer_sizes(Index p, int depth) {
  std::vector<Index> sizes{p};
  Index div = 1;
  for (int k = 0; k < depth; ++k) {
    div *= 2;
    sizes.push_back(std::max<Index>((p + div - 1) / div, 2));
  }
  return sizes;
}

EncoderTrace encode_trace(const AutoEncoderParams& params, const Matrix& rows) {
  if (rows.cols() != params.input_dim()) {
    throw Error(ErrorKind::kShape, "encoder expects " + std::to_string(params.input_dim()) +
                                       " inputs, got " + std::to_string(rows.cols()));
  }
  EncoderTrace trace;
  trace.activations.reserve(params.enc_w.size() + 1);
  trace.activations.push_back(rows);
  for (std::size_t k = 0; k < params.enc_w.size(); ++k) {
    trace.activations.push_back(dense_layer(trace.activations.back(), params.enc_w[k], params.enc_b[k]));
  }
  return trace;
}

Matrix encode_batch(const AutoEncoderParams& params, const Matrix& rows) {
  if (rows.cols() != params.input_dim()) {
    throw Error(ErrorKind::kShape, "encoder expects " + std::to_string(params.input_dim()) +
                                       " inputs, got " + std::to_string(rows.cols()));
  }
  Matrix h = rows;
  for (std::size_t k = 0; k < params.enc_w.size(); ++k) {
    h = dense_layer(h, params.enc_w[k], params.enc_b[k]);
  }
  return h;
}

Matrix decode_batch(const AutoEncoderParams& params, const Matrix& codes) {
  if (codes.cols() != params.code_dim()) {
    throw Error(ErrorKind::kShape, "decoder expects " + std::to_string(params.code_dim()) +
                                       " inputs, got " + std::to_string(codes.cols()));
  }
  Matrix g = codes;
  for (std::size_t k = params.dec_w.size(); k-- > 0;) {
    g = dense_layer(g, params.dec_w[k], params.dec_b[k]);
  }
  return g;
}

namespace {

// Runs the encoder on X with column j zeroed, starting from the shared
// first-layer pre-activation X A_1^T + b_1.
template <typename Sink>
void for_each_dropped(const AutoEncoderParams& params, const Matrix& features, Sink&& sink) {
  if (features.cols() != params.input_dim()) {
    throw Error(ErrorKind::kShape, "encoder expects " + std::to_string(params.input_dim()) +
                                       " inputs, got " + std::to_string(features.cols()));
  }
  Matrix shared;
  if (!params.enc_w.empty()) {
    shared = features * params.enc_w[0].transpose();
    shared.rowwise() += params.enc_b[0].transpose();
  }
  for (Index j = 0; j < features.cols(); ++j) {
    std::vector<Matrix> acts;
    acts.reserve(params.enc_w.size() + 1);
    Matrix input = features;
    input.col(j).setZero();
    acts.push_back(std::move(input));
    if (!params.enc_w.empty()) {
      Matrix pre = shared;
      pre.noalias() -= features.col(j) * params.enc_w[0].col(j).transpose();
      acts.push_back(activate(std::move(pre)));
      for (std::size_t k = 1; k < params.enc_w.size(); ++k) {
        acts.push_back(dense_layer(acts.back(), params.enc_w[k], params.enc_b[k]));
      }
    }
    sink(std::move(acts));
  }
}

}  // namespace

std::vector<EncoderTrace> encode_column_dropped(const AutoEncoderParams& params,
                                                const Matrix& features) {
  std::vector<EncoderTrace> traces;
  for_each_dropped(params, features, [&](std::vector<Matrix>&& acts) {
    traces.push_back(EncoderTrace{std::move(acts)});
  });
  return traces;
}

std::vector<Matrix> encode_column_dropped_codes(const AutoEncoderParams& params,
                                                const Matrix& features) {
  std::vector<Matrix> codes;
  for_each_dropped(params, features, [&](std::vector<Matrix>&& acts) {
    codes.push_back(std::move(acts.back()));
  });
  return codes;
}

Vector encode(const AutoEncoderParams& params, const Vector& x) {
  return encode_batch(params, x.transpose()).row(0).transpose();
}

Vector decode(const AutoEncoderParams& params, const Vector& h) {
  return decode_batch(params, h.transpose()).row(0).transpose();
}

Vector recon_row_errors(const AutoEncoderParams& params, const Matrix& features) {
  const Matrix recon = decode_batch(params, encode_batch(params, features));
  return (features - recon).rowwise().squaredNorm();
}

double recon_loss(const AutoEncoderParams& params, const Matrix& features, const Vector& weights) {
  if (weights.size() != features.rows()) throw Error(ErrorKind::kShape, "weights length must equal n");
  return weights.array().square().matrix().dot(recon_row_errors(params, features));
}

void accumulate_encoder_grads(const AutoEncoderParams& params, const EncoderTrace& trace,
                              const Matrix& upstream, AutoEncoderParams& grads) {
  const std::size_t depth = params.enc_w.size();
  if (depth == 0) return;
  if (upstream.rows() != trace.code().rows() || upstream.cols() != trace.code().cols()) {
    throw Error(ErrorKind::kShape, "upstream gradient must be n x l_K");
  }
  Matrix delta = upstream.cwiseProduct(sigmoid_slope(trace.activations[depth]));
  for (std::size_t k = depth; k-- > 0;) {
    grads.enc_w[k].noalias() += delta.transpose() * trace.activations[k];
    grads.enc_b[k] += delta.colwise().sum().transpose();
    if (k > 0) {
      delta = (delta * params.enc_w[k]).cwiseProduct(sigmoid_slope(trace.activations[k]));
    }
  }
}

AutoEncoderParams autoenc_grads(const AutoEncoderParams& params, const Matrix& features,
                                const Vector& weights, const Matrix& upstream,
                                double lambda2, double lambda7) {
  if (weights.size() != features.rows()) throw Error(ErrorKind::kShape, "weights length must equal n");
  AutoEncoderParams grads = params.zeros_like();
  const std::size_t depth = params.enc_w.size();
  if (depth == 0) return grads;

  const EncoderTrace trace = encode_trace(params, features);
  Matrix code_grad = upstream;
  if (code_grad.rows() != features.rows() || code_grad.cols() != params.code_dim()) {
    throw Error(ErrorKind::kShape, "upstream gradient must be n x l_K");
  }

  if (lambda2 != 0.0) {
    // decoder forward, keeping every layer's output
    std::vector<Matrix> dec(depth + 1);
    dec[depth] = trace.code();
    for (std::size_t k = depth; k-- > 0;) dec[k] = dense_layer(dec[k + 1], params.dec_w[k], params.dec_b[k]);

    const Vector w2 = weights.array().square().matrix();
    Matrix g = -2.0 * lambda2 * ((features - dec[0]).array().colwise() * w2.array()).matrix();
    for (std::size_t k = 0; k < depth; ++k) {
      const Matrix delta = g.cwiseProduct(sigmoid_slope(dec[k]));
      grads.dec_w[k].noalias() += delta.transpose() * dec[k + 1];
      grads.dec_b[k] += delta.colwise().sum().transpose();
      g = delta * params.dec_w[k];
    }
    code_grad += g;
  }

  accumulate_encoder_grads(params, trace, code_grad, grads);

  if (lambda7 != 0.0) {
    for (std::size_t k = 0; k < depth; ++k) {
      grads.enc_w[k] += 2.0 * lambda7 * params.enc_w[k];
      grads.dec_w[k] += 2.0 * lambda7 * params.dec_w[k];
    }
  }
  return grads;
}

}  // namespace dgbr

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dgbr/core.hpp"

namespace dgbr {

/// Pre-activations are clamped to [-kActivationClamp, kActivationClamp].
inline constexpr double kActivationClamp = 30.0;

double sigmoid(double x);

/// K-layer sigmoid auto-encoder.
///
/// Encoder layer k (1-based) maps l_{k-1} -> l_k with weights enc_w[k-1]
/// (l_k x l_{k-1}) and bias enc_b[k-1]. Decoder layer k maps l_k -> l_{k-1}
/// with dec_w[k-1] (l_{k-1} x l_k); decoding runs k = K..1. With K = 0 both
/// directions are the identity.
struct AutoEncoderParams {
  std::vector<Index> layer_sizes;  // l_0 = p, ..., l_K
  std::vector<Matrix> enc_w;
  std::vector<Vector> enc_b;
  std::vector<Matrix> dec_w;
  std::vector<Vector> dec_b;

  int depth() const { return static_cast<int>(layer_sizes.size()) - 1; }
  Index input_dim() const { return layer_sizes.front(); }
  Index code_dim() const { return layer_sizes.back(); }

  static AutoEncoderParams zeros(std::vector<Index> layer_sizes);

  /// Weights uniform on [-r, r] with r = sqrt(6 / (l_k + l_{k-1})), biases 0.
  static AutoEncoderParams random(std::vector<Index> layer_sizes, std::mt19937_64& rng);

  AutoEncoderParams zeros_like() const { return zeros(layer_sizes); }

  /// this += scale * other (same shapes).
  void add_scaled(const AutoEncoderParams& other, double scale);
  double dot(const AutoEncoderParams& other) const;
  /// Sum of squared Frobenius norms of the weight matrices (biases excluded).
  double weight_squared_norm() const;
  bool all_finite() const;
};

/// (p, max(ceil(p/2), 2), max(ceil(p/4), 2), ...) truncated to `depth` layers.
std::vector<Index> default_layer_sizes(Index p, int depth = 2);

/// Activations of every encoder layer for a batch; activations[0] is the input.
struct EncoderTrace {
  std::vector<Matrix> activations;
  const Matrix& code() const { return activations.back(); }
};

EncoderTrace encode_trace(const AutoEncoderParams& params, const Matrix& rows);
Matrix encode_batch(const AutoEncoderParams& params, const Matrix& rows);
Matrix decode_batch(const AutoEncoderParams& params, const Matrix& codes);

/// Traces (or codes) of X with column j set to zero, for every column j.
/// The first-layer product is shared across columns.
std::vector<EncoderTrace> encode_column_dropped(const AutoEncoderParams& params,
                                                const Matrix& features);
std::vector<Matrix> encode_column_dropped_codes(const AutoEncoderParams& params,
                                                const Matrix& features);

Vector encode(const AutoEncoderParams& params, const Vector& x);
Vector decode(const AutoEncoderParams& params, const Vector& h);

/// sum_i W_i^2 * ||X_i - decode(encode(X_i))||^2
double recon_loss(const AutoEncoderParams& params, const Matrix& features, const Vector& weights);

/// Per-row squared reconstruction error ||X_i - X^_i||^2.
Vector recon_row_errors(const AutoEncoderParams& params, const Matrix& features);

/// Backpropagates `upstream` (dL/d code, one row per input row) through the
/// encoder and adds the resulting parameter gradients into `grads`.
void accumulate_encoder_grads(const AutoEncoderParams& params, const EncoderTrace& trace,
                              const Matrix& upstream, AutoEncoderParams& grads);

/// Gradient of
///   <upstream, encode(X)> + lambda2 * recon_loss + lambda7 * sum ||A||^2 + ||A^||^2
/// with respect to every encoder and decoder parameter. `upstream` carries
/// the prediction and balancing contributions at the code layer.
AutoEncoderParams autoenc_grads(const AutoEncoderParams& params, const Matrix& features,
                                const Vector& weights, const Matrix& upstream,
                                double lambda2, double lambda7);

}  // namespace dgbr

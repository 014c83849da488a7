#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgbr/core.hpp"

namespace dgbr {

/// Largest p accepted by expected_alpha.
inline constexpr int kExpectedAlphaMaxP = 20;

/// Worst-case maximum covariate imbalance when m of the 2^p binary patterns
/// are absent from the sample. Valid for 2 <= p <= 62 and 0 <= m < 2^p.
double alpha_from_m(int p, std::int64_t m);

/// E[alpha] when the 2^p pattern counts of n samples are a uniformly drawn
/// composition of n. Binomials are exact; the final ratio is taken at
/// 512-bit precision.
double expected_alpha(std::int64_t n, int p);

struct BoundInputs {
  std::int64_t n = 1;
  int p = 2;
  int K = 0;
  /// Layer widths l_0 = p, ..., l_K without the appended bias unit; the
  /// calculator adds one to each.
  std::vector<Index> layer_sizes;
  double lambda4 = 0.0;
  double lambda5 = 0.0;
  double lambda7 = 0.0;
  std::vector<double> bias_caps;  // M^(1..K)
  double delta = 0.05;
  double loss_sup = 0.0;
  double epsilon_l1 = 0.0;

  void validate() const;
};

struct RiskBound {
  double complexity = 0.0;
  double confidence = 0.0;
  double imbalance = 0.0;
  double total = 0.0;
};

/// Excess-risk terms of the fixed-weight generalization bound:
///   2^(K+3) sqrt(2 ln(2p)/n) min(sqrt(l4 l_K), l5) prod_k B_k sqrt(l_{k-1})
///   + 3 sqrt(ln(2/delta)/(2n)) + 2 loss_sup epsilon_l1
/// with B_k = sqrt(l7 + M_k^2).
RiskBound risk_bound(const BoundInputs& b);

/// B_k = sqrt(lambda7 + M^2).
double layer_norm_cap(double lambda7, double bias_cap);

BoundInputs bound_inputs_from_json(const std::string& text);
std::string to_json(const RiskBound& bound);

}  // namespace dgbr

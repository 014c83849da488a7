#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dgbr/core.hpp"

namespace dgbr {

/// Arm masses below this mark a treatment column as degenerate.
inline constexpr double kDegenerateMass = 1e-12;

/// Largest p for which pattern-indexed diagnostics are enumerated.
inline constexpr int kPatternCap = 25;

/// Global sample weights, stored through their square roots so that
/// W = omega * omega is non-negative by construction.
struct SampleWeights {
  Vector omega;

  static SampleWeights uniform(Index n) { return {Vector::Ones(n)}; }
  static SampleWeights from_weights(const Vector& w);

  Vector weights() const { return omega.array().square().matrix(); }
  Index size() const { return omega.size(); }
};

/// Maps a batch of rows (n x p) to their embedding (n x d).
using RowEmbedding = std::function<Matrix(const Matrix&)>;

struct BalanceTerms {
  Vector per_treatment;            // one summand per treatment column
  double total = 0.0;
  std::vector<Index> degenerate;   // treatment columns that were skipped
};

struct BalanceGradient {
  BalanceTerms terms;
  Vector d_weights;                // dL/dW
  std::vector<Matrix> d_covariates;  // dL/dC_j, empty unless requested
};

/// Global balancing loss. Each column is used in turn as the treatment and
/// the weighted means of the remaining covariates are compared between its
/// two arms. With `embed`, the covariates for treatment j are
/// embed(X with column j set to zero).
BalanceTerms balancing_terms(const Matrix& features, const Vector& weights,
                             const RowEmbedding& embed = {});

double balancing_loss(const Matrix& features, const SampleWeights& w,
                      const RowEmbedding& embed = {});

/// Gradient of balancing_loss with respect to omega.
Vector balancing_loss_grad_w(const Matrix& features, const SampleWeights& w,
                             const RowEmbedding& embed = {});

/// Loss and gradients given explicit per-treatment covariate matrices:
/// covariates[j] holds the rows whose arm means are compared when column j
/// of `features` is the treatment.
BalanceGradient balance_with_gradient(const Matrix& features,
                                      const Vector& weights,
                                      std::span<const Matrix> covariates,
                                      bool covariate_grads);

/// Same as balance_with_gradient on the raw features, computed from the
/// weighted Gram matrix in O(n p^2).
BalanceGradient raw_balance_with_gradient(const Matrix& features,
                                          const Vector& weights);

/// X with column j zeroed, for every j.
std::vector<Matrix> zeroed_column_inputs(const Matrix& features);

/// Appends X_a * X_b for every pair a < b after the original columns.
Matrix with_interactions(const Matrix& features);

/// W_i = 1 / (empirical frequency of row i's pattern).
SampleWeights exact_balancing_weights(const Matrix& features);

/// Largest absolute arm-mean gap over every (treatment, covariate) pair.
/// Degenerate treatments score 1.
double max_imbalance(const Matrix& features, const Vector& weights);

/// Bit j of a code is feature j; the string key lists feature 1 first.
std::vector<std::uint32_t> pattern_codes(const Matrix& features);
std::string pattern_key(std::uint32_t code, int p);

/// 2^p minus the number of distinct rows.
std::int64_t missing_pattern_count(const Matrix& features);

/// Dense table over all 2^p patterns.
class PatternTable {
 public:
  PatternTable(int p, std::vector<double> values)
      : p_(p), values_(std::move(values)) {}

  int p() const { return p_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::uint32_t code) const { return values_[code]; }
  double at(std::string_view key) const;
  double sum() const;
  double l1() const;

 private:
  int p_;
  std::vector<double> values_;
};

/// Weighted joint pmf minus the product of weighted marginals, per pattern.
PatternTable imbalance_epsilon(const Matrix& features, const Vector& weights);

struct ImbalanceReport {
  Vector per_treatment_loss;
  double total_loss = 0.0;
  double max_imbalance_alpha = 0.0;
  std::vector<Index> degenerate_columns;
  std::optional<std::int64_t> missing_pattern_count_m;
  std::optional<PatternTable> epsilon_by_pattern;
};

ImbalanceReport imbalance_report(const Matrix& features, const Vector& weights,
                                 int pattern_cap = kPatternCap);

/// Patterns are keyed as bit strings ("0110").
std::string to_json(const ImbalanceReport& report);

}  // namespace dgbr

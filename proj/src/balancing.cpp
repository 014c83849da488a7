#include "dgbr/balancing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "dgbr/error.hpp"

namespace dgbr {

namespace {

void check_weights(const Matrix& features, const Vector& weights) {
  if (weights.size() != features.rows()) {
    throw Error(ErrorKind::kShape, "weights length " + std::to_string(weights.size()) +
                                       " does not match " +
                                       std::to_string(features.rows()) + " rows");
  }
}

void check_pattern_cap(Index p) {
  if (p > kPatternCap) {
    throw Error(ErrorKind::kUnsupportedDimension,
                "pattern enumeration is limited to p <= " + std::to_string(kPatternCap) +
                    " (got " + std::to_string(p) + ")");
  }
}

}  // namespace

SampleWeights SampleWeights::from_weights(const Vector& w) {
  if ((w.array() < 0.0).any()) {
    throw Error(ErrorKind::kInvalidWeights, "sample weights must be non-negative");
  }
  return {w.array().sqrt().matrix()};
}

BalanceGradient balance_with_gradient(const Matrix& features, const Vector& weights,
                                      std::span<const Matrix> covariates,
                                      bool covariate_grads) {
  check_weights(features, weights);
  const Index n = features.rows();
  const Index p = features.cols();
  if (static_cast<Index>(covariates.size()) != p) {
    throw Error(ErrorKind::kShape, "need one covariate matrix per treatment column");
  }

  BalanceGradient out;
  out.terms.per_treatment = Vector::Zero(p);
  out.d_weights = Vector::Zero(n);
  if (covariate_grads) out.d_covariates.resize(static_cast<std::size_t>(p));

  const double total = weights.sum();
  for (Index j = 0; j < p; ++j) {
    const Matrix& cov = covariates[static_cast<std::size_t>(j)];
    if (cov.rows() != n) throw Error(ErrorKind::kShape, "covariate rows must equal n");

    const auto treat = features.col(j).array();
    const Vector w_treat = (weights.array() * treat).matrix();
    const double mass1 = w_treat.sum();
    const double mass0 = total - mass1;
    if (mass1 < kDegenerateMass || mass0 < kDegenerateMass) {
      out.terms.degenerate.push_back(j);
      if (covariate_grads) out.d_covariates[static_cast<std::size_t>(j)] = Matrix::Zero(n, cov.cols());
      continue;
    }
    const Vector w_ctrl = weights - w_treat;
    const Vector mean1 = cov.transpose() * w_treat / mass1;
    const Vector mean0 = cov.transpose() * w_ctrl / mass0;
    const Vector gap = mean1 - mean0;
    out.terms.per_treatment(j) = gap.squaredNorm();

    // d mean1 / dW_i = T_i (c_i - mean1) / mass1, likewise for the control arm.
    const Vector proj = cov * gap;
    const double m1g = mean1.dot(gap);
    const double m0g = mean0.dot(gap);
    out.d_weights.array() +=
        2.0 * (treat * (proj.array() - m1g) / mass1 -
               (1.0 - treat) * (proj.array() - m0g) / mass0);

    if (covariate_grads) {
      const Vector scale =
          (2.0 * weights.array() * (treat / mass1 - (1.0 - treat) / mass0)).matrix();
      out.d_covariates[static_cast<std::size_t>(j)] = scale * gap.transpose();
    }
  }
  out.terms.total = out.terms.per_treatment.sum();
  return out;
}

BalanceGradient raw_balance_with_gradient(const Matrix& features, const Vector& weights) {
  check_weights(features, weights);
  const Index n = features.rows();
  const Index p = features.cols();

  const Matrix weighted = features.array().colwise() * weights.array();
  const Matrix gram = features.transpose() * weighted;  // sum_i W_i X_ij X_ik
  const Vector colsum = weighted.colwise().sum().transpose();
  const double total = weights.sum();

  BalanceGradient out;
  out.terms.per_treatment = Vector::Zero(p);

  // Column j of `gaps` is the arm-mean difference for treatment j (entry j is 0).
  Matrix gaps = Matrix::Zero(p, p);
  Vector mass1(p), mass0(p), m1g = Vector::Zero(p), m0g = Vector::Zero(p);
  std::vector<bool> live(static_cast<std::size_t>(p), false);
  for (Index j = 0; j < p; ++j) {
    mass1(j) = colsum(j);
    mass0(j) = total - colsum(j);
    if (mass1(j) < kDegenerateMass || mass0(j) < kDegenerateMass) {
      out.terms.degenerate.push_back(j);
      continue;
    }
    live[static_cast<std::size_t>(j)] = true;
    for (Index k = 0; k < p; ++k) {
      if (k == j) continue;
      const double a = gram(j, k) / mass1(j);
      const double b = (colsum(k) - gram(j, k)) / mass0(j);
      gaps(k, j) = a - b;
      m1g(j) += a * gaps(k, j);
      m0g(j) += b * gaps(k, j);
    }
    out.terms.per_treatment(j) = gaps.col(j).squaredNorm();
  }
  out.terms.total = out.terms.per_treatment.sum();

  const Matrix proj = features * gaps;  // n x p
  out.d_weights = Vector::Zero(n);
  for (Index j = 0; j < p; ++j) {
    if (!live[static_cast<std::size_t>(j)]) continue;
    const auto treat = features.col(j).array();
    out.d_weights.array() += 2.0 * (treat * (proj.col(j).array() - m1g(j)) / mass1(j) -
                                    (1.0 - treat) * (proj.col(j).array() - m0g(j)) / mass0(j));
  }
  return out;
}

std::vector<Matrix> zeroed_column_inputs(const Matrix& features) {
  std::vector<Matrix> inputs;
  inputs.reserve(static_cast<std::size_t>(features.cols()));
  for (Index j = 0; j < features.cols(); ++j) {
    Matrix x = features;
    x.col(j).setZero();
    inputs.push_back(std::move(x));
  }
  return inputs;
}

namespace {

std::vector<Matrix> embedded_covariates(const Matrix& features, const RowEmbedding& embed) {
  auto inputs = zeroed_column_inputs(features);
  if (!embed) return inputs;
  for (auto& x : inputs) x = embed(x);
  return inputs;
}

}  // namespace

BalanceTerms balancing_terms(const Matrix& features, const Vector& weights,
                             const RowEmbedding& embed) {
  if (!embed) return raw_balance_with_gradient(features, weights).terms;
  const auto cov = embedded_covariates(features, embed);
  return balance_with_gradient(features, weights, cov, false).terms;
}

double balancing_loss(const Matrix& features, const SampleWeights& w, const RowEmbedding& embed) {
  return balancing_terms(features, w.weights(), embed).total;
}

Vector balancing_loss_grad_w(const Matrix& features, const SampleWeights& w,
                             const RowEmbedding& embed) {
  const Vector weights = w.weights();
  Vector d_weights;
  if (!embed) {
    d_weights = raw_balance_with_gradient(features, weights).d_weights;
  } else {
    const auto cov = embedded_covariates(features, embed);
    d_weights = balance_with_gradient(features, weights, cov, false).d_weights;
  }
  return (2.0 * w.omega.array() * d_weights.array()).matrix();
}

Matrix with_interactions(const Matrix& features) {
  const Index p = features.cols();
  Matrix out(features.rows(), p + p * (p - 1) / 2);
  out.leftCols(p) = features;
  Index c = p;
  for (Index a = 0; a < p; ++a) {
    for (Index b = a + 1; b < p; ++b) {
      out.col(c++) = features.col(a).cwiseProduct(features.col(b));
    }
  }
  return out;
}

SampleWeights exact_balancing_weights(const Matrix& features) {
  const Index n = features.rows();
  std::vector<std::string> keys(static_cast<std::size_t>(n));
  std::map<std::string, Index> counts;
  for (Index i = 0; i < n; ++i) {
    std::string key(static_cast<std::size_t>(features.cols()), '0');
    for (Index j = 0; j < features.cols(); ++j) {
      if (features(i, j) != 0.0) key[static_cast<std::size_t>(j)] = '1';
    }
    ++counts[key];
    keys[static_cast<std::size_t>(i)] = std::move(key);
  }
  Vector w(n);
  for (Index i = 0; i < n; ++i) {
    w(i) = static_cast<double>(n) / static_cast<double>(counts[keys[static_cast<std::size_t>(i)]]);
  }
  return SampleWeights::from_weights(w);
}

double max_imbalance(const Matrix& features, const Vector& weights) {
  check_weights(features, weights);
  const Index p = features.cols();
  const Matrix weighted = features.array().colwise() * weights.array();
  const Matrix gram = features.transpose() * weighted;
  const Vector colsum = weighted.colwise().sum().transpose();
  const double total = weights.sum();

  double alpha = 0.0;
  for (Index j = 0; j < p; ++j) {
    const double mass1 = colsum(j);
    const double mass0 = total - colsum(j);
    if (mass1 < kDegenerateMass || mass0 < kDegenerateMass) {
      alpha = 1.0;  // 0/0 := 1
      continue;
    }
    for (Index k = 0; k < p; ++k) {
      if (k == j) continue;
      const double gap = gram(j, k) / mass1 - (colsum(k) - gram(j, k)) / mass0;
      alpha = std::max(alpha, std::abs(gap));
    }
  }
  return std::min(alpha, 1.0);
}

std::vector<std::uint32_t> pattern_codes(const Matrix& features) {
  check_pattern_cap(features.cols());
  std::vector<std::uint32_t> codes(static_cast<std::size_t>(features.rows()), 0U);
  for (Index i = 0; i < features.rows(); ++i) {
    std::uint32_t code = 0;
    for (Index j = 0; j < features.cols(); ++j) {
      if (features(i, j) != 0.0) code |= (1U << j);
    }
    codes[static_cast<std::size_t>(i)] = code;
  }
  return codes;
}

std::string pattern_key(std::uint32_t code, int p) {
  std::string key(static_cast<std::size_t>(p), '0');
  for (int j = 0; j < p; ++j) {
    if (code & (1U << j)) key[static_cast<std::size_t>(j)] = '1';
  }
  return key;
}

std::int64_t missing_pattern_count(const Matrix& features) {
  auto codes = pattern_codes(features);
  std::sort(codes.begin(), codes.end());
  const auto distinct = std::unique(codes.begin(), codes.end()) - codes.begin();
  return (std::int64_t{1} << features.cols()) - static_cast<std::int64_t>(distinct);
}

double PatternTable::at(std::string_view key) const {
  if (static_cast<int>(key.size()) != p_) throw Error(ErrorKind::kShape, "pattern key has wrong length");
  std::uint32_t code = 0;
  for (int j = 0; j < p_; ++j) {
    if (key[static_cast<std::size_t>(j)] == '1') {
      code |= (1U << j);
    } else if (key[static_cast<std::size_t>(j)] != '0') {
      throw Error(ErrorKind::kInvalidInput, "pattern key must be a bit string");
    }
  }
  return values_[code];
}

double PatternTable::sum() const {
  // pairwise keeps the rounding error independent of 2^p ordering effects
  std::vector<double> buf = values_;
  for (std::size_t width = buf.size(); width > 1; width = (width + 1) / 2) {
    for (std::size_t i = 0; i < width / 2; ++i) buf[i] = buf[2 * i] + buf[2 * i + 1];
    if (width % 2) buf[width / 2] = buf[width - 1];
  }
  return buf.empty() ? 0.0 : buf[0];
}

double PatternTable::l1() const {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s;
}

PatternTable imbalance_epsilon(const Matrix& features, const Vector& weights) {
  check_weights(features, weights);
  const int p = static_cast<int>(features.cols());
  const auto codes = pattern_codes(features);
  if ((weights.array() < 0.0).any()) {
    throw Error(ErrorKind::kInvalidWeights, "sample weights must be non-negative");
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::kInvalidWeights, "sample weights sum to zero");

  const std::size_t cells = std::size_t{1} << p;
  std::vector<double> joint(cells, 0.0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    joint[codes[i]] += weights(static_cast<Index>(i)) / total;
  }

  // product of weighted marginals, built one feature at a time
  std::vector<double> product(cells, 0.0);
  product[0] = 1.0;
  for (int j = 0; j < p; ++j) {
    const double one = features.col(j).dot(weights) / total;
    const double zero = (Vector::Ones(features.rows()) - features.col(j)).dot(weights) / total;
    const std::size_t half = std::size_t{1} << j;
    for (std::size_t c = 0; c < half; ++c) {
      product[c | half] = product[c] * one;
      product[c] *= zero;
    }
  }

  std::vector<double> eps(cells);
  for (std::size_t c = 0; c < cells; ++c) eps[c] = joint[c] - product[c];
  return PatternTable(p, std::move(eps));
}

ImbalanceReport imbalance_report(const Matrix& features, const Vector& weights, int pattern_cap) {
  ImbalanceReport report;
  const auto terms = raw_balance_with_gradient(features, weights).terms;
  report.per_treatment_loss = terms.per_treatment;
  report.total_loss = terms.total;
  report.degenerate_columns = terms.degenerate;
  report.max_imbalance_alpha = max_imbalance(features, weights);
  if (features.cols() <= std::min(pattern_cap, kPatternCap)) {
    report.missing_pattern_count_m = missing_pattern_count(features);
    report.epsilon_by_pattern = imbalance_epsilon(features, weights);
  }
  return report;
}

std::string to_json(const ImbalanceReport& report) {
  nlohmann::json doc;
  doc["per_treatment_loss"] = std::vector<double>(report.per_treatment_loss.data(),
                                                  report.per_treatment_loss.data() +
                                                      report.per_treatment_loss.size());
  doc["total_loss"] = report.total_loss;
  doc["max_imbalance_alpha"] = report.max_imbalance_alpha;
  doc["degenerate_columns"] = report.degenerate_columns;
  if (report.missing_pattern_count_m) {
    doc["missing_pattern_count_m"] = *report.missing_pattern_count_m;
  } else {
    doc["missing_pattern_count_m"] = nullptr;
  }
  if (report.epsilon_by_pattern) {
    const auto& table = *report.epsilon_by_pattern;
    nlohmann::json eps = nlohmann::json::object();
    for (std::size_t c = 0; c < table.values().size(); ++c) {
      eps[pattern_key(static_cast<std::uint32_t>(c), table.p())] = table.values()[c];
    }
    doc["epsilon_by_pattern"] = std::move(eps);
    doc["epsilon_l1"] = table.l1();
  } else {
    doc["epsilon_by_pattern"] = nullptr;
  }
  return doc.dump(2);
}

}  // namespace dgbr

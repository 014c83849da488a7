#include "dgbr/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "dgbr/error.hpp"

namespace dgbr {

using nlohmann::json;

namespace {

constexpr int kMaxHalvings = 30;

Vector margins_sign(const Vector& outcome) { return (1.0 - 2.0 * outcome.array()).matrix(); }

std::vector<EncoderTrace> treatment_traces(const AutoEncoderParams& theta, const Matrix& features) {
  return encode_column_dropped(theta, features);
}

std::vector<Matrix> treatment_codes(const AutoEncoderParams& theta, const Matrix& features) {
  return encode_column_dropped_codes(theta, features);
}

double weight_penalties(const HyperParams& h, const Vector& w) {
  const double excess = w.sum() - 1.0;
  return h.lambda3 * w.squaredNorm() + h.lambda6 * excess * excess;
}

double beta_penalties(const HyperParams& h, const Vector& beta) {
  return h.lambda4 * beta.squaredNorm() + h.lambda5 * beta.lpNorm<1>();
}

double theta_penalty(const FitState& s) {
  return s.embedded ? s.hyper.lambda7 * s.theta.weight_squared_norm() : 0.0;
}

LossBreakdown evaluate_impl(const FitState& s, bool need_balance) {
  const Matrix& x = s.data->features();
  const Vector w = s.weights();
  LossBreakdown out;
  const Matrix phi = s.embedded ? encode_batch(s.theta, x) : x;
  out.pre = loss_pre(phi, s.data->outcome(), s.beta, w);
  if (need_balance || s.hyper.lambda1 != 0.0) {
    if (s.embedded) {
      const auto codes = treatment_codes(s.theta, x);
      out.bal = balance_with_gradient(x, w, codes, false).terms.total;
    } else {
      out.bal = raw_balance_with_gradient(s.balance_features, w).terms.total;
    }
  }
  if (s.embedded && s.theta.depth() > 0) out.ae = recon_loss(s.theta, x, w);
  out.reg = weight_penalties(s.hyper, w) + beta_penalties(s.hyper, s.beta) + theta_penalty(s);
  out.mix = out.pre + s.hyper.lambda1 * out.bal + s.hyper.lambda2 * out.ae + out.reg;
  return out;
}

// L_mix as a function of W alone, with beta and theta frozen.
class WeightObjective {
 public:
  explicit WeightObjective(const FitState& s) : s_(s) {
    const Matrix& x = s.data->features();
    const Matrix phi = s.embedded ? encode_batch(s.theta, x) : x;
    const Vector z = phi * s.beta;
    const Vector sign = margins_sign(s.data->outcome());
    row_loss_ = Vector(z.size());
    for (Index i = 0; i < z.size(); ++i) row_loss_(i) = softplus(sign(i) * z(i));
    if (s.embedded && s.theta.depth() > 0) recon_ = recon_row_errors(s.theta, x);
    if (s.hyper.lambda1 != 0.0 && s.embedded) codes_ = treatment_codes(s.theta, x);
    fixed_ = beta_penalties(s.hyper, s.beta) + theta_penalty(s);
  }

  double value(const Vector& w) const {
    double v = w.dot(row_loss_) + weight_penalties(s_.hyper, w) + fixed_;
    if (s_.hyper.lambda1 != 0.0) v += s_.hyper.lambda1 * balance(w, false).terms.total;
    if (recon_.size() > 0) v += s_.hyper.lambda2 * w.array().square().matrix().dot(recon_);
    return v;
  }

  Vector grad(const Vector& w) const {
    Vector g = row_loss_;
    g += 2.0 * s_.hyper.lambda3 * w;
    g.array() += 2.0 * s_.hyper.lambda6 * (w.sum() - 1.0);
    if (s_.hyper.lambda1 != 0.0) g += s_.hyper.lambda1 * balance(w, true).d_weights;
    if (recon_.size() > 0) g += 2.0 * s_.hyper.lambda2 * w.cwiseProduct(recon_);
    return g;
  }

 private:
  BalanceGradient balance(const Vector& w, bool) const {
    if (s_.embedded) return balance_with_gradient(s_.data->features(), w, codes_, false);
    return raw_balance_with_gradient(s_.balance_features, w);
  }

  const FitState& s_;
  Vector row_loss_;
  Vector recon_;
  std::vector<Matrix> codes_;
  double fixed_ = 0.0;
};

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::kLR: return "LR";
    case Method::kDLR: return "DLR";
    case Method::kGBR: return "GBR";
    case Method::kDGBR: return "DGBR";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "LR") return Method::kLR;
  if (name == "DLR") return Method::kDLR;
  if (name == "GBR") return Method::kGBR;
  if (name == "DGBR") return Method::kDGBR;
  throw Error(ErrorKind::kConfig, "unknown method '" + name + "' (expected LR, DLR, GBR or DGBR)");
}

void HyperParams::validate() const {
  for (double l : {lambda1, lambda2, lambda3, lambda4, lambda5, lambda6, lambda7}) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw Error(ErrorKind::kConfig, "penalty multipliers must be finite and non-negative");
    }
  }
  if (!(tol > 0.0)) throw Error(ErrorKind::kConfig, "tol must be positive");
  if (!(step_w > 0.0) || !(step_theta > 0.0)) throw Error(ErrorKind::kConfig, "steps must be positive");
  if (max_outer_iters < 1) throw Error(ErrorKind::kConfig, "max_outer_iters must be >= 1");
  if (freeze_w_after && *freeze_w_after < 0) throw Error(ErrorKind::kConfig, "freeze_w_after must be >= 0");
  if (depth < 0) throw Error(ErrorKind::kConfig, "depth must be >= 0");
  for (Index l : hidden_layers) {
    if (l < 1) throw Error(ErrorKind::kConfig, "hidden layer widths must be positive");
  }
}

Matrix DgbrModel::embed(const Matrix& features) const {
  if (features.cols() != autoenc.input_dim()) {
    throw Error(ErrorKind::kShape, "model expects " + std::to_string(autoenc.input_dim()) +
                                       " features, got " + std::to_string(features.cols()));
  }
  return encode_batch(autoenc, features);
}

Vector DgbrModel::predict_proba(const Matrix& features) const {
  const Vector z = embed(features) * beta;
  return z.unaryExpr([](double v) {
    return sigmoid(std::clamp(v, -kActivationClamp, kActivationClamp));
  });
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double loss_pre(const Matrix& embedded, const Vector& outcome, const Vector& beta,
                const Vector& weights) {
  if (embedded.cols() != beta.size() || embedded.rows() != outcome.size() ||
      weights.size() != outcome.size()) {
    throw Error(ErrorKind::kShape, "loss_pre: inconsistent shapes");
  }
  const Vector z = embedded * beta;
  double total = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    if (weights(i) == 0.0) continue;
    total += weights(i) * softplus((1.0 - 2.0 * outcome(i)) * z(i));
  }
  return total;
}

Vector update_beta(const Matrix& embedded, const Vector& outcome, const Vector& weights,
                   double lambda4, double lambda5, const std::optional<Vector>& start,
                   const BetaSolverOptions& options) {
  const Index d = embedded.cols();
  if (embedded.rows() != outcome.size() || weights.size() != outcome.size()) {
    throw Error(ErrorKind::kShape, "update_beta: inconsistent shapes");
  }
  if (lambda4 < 0.0 || lambda5 < 0.0) throw Error(ErrorKind::kDomain, "lambda4, lambda5 must be >= 0");
  Vector x = start ? *start : Vector::Zero(d);
  if (x.size() != d) throw Error(ErrorKind::kShape, "update_beta: start has wrong length");

  const Vector sign = margins_sign(outcome);
  auto smooth = [&](const Vector& b) {
    return loss_pre(embedded, outcome, b, weights) + lambda4 * b.squaredNorm();
  };
  auto smooth_grad = [&](const Vector& b) {
    const Vector z = embedded * b;
    Vector r(z.size());
    for (Index i = 0; i < z.size(); ++i) {
      const double m = sign(i) * z(i);
      r(i) = weights(i) * sign(i) * sigmoid(m);
    }
    return Vector(embedded.transpose() * r + 2.0 * lambda4 * b);
  };
  auto objective = [&](const Vector& b) { return smooth(b) + lambda5 * b.lpNorm<1>(); };
  auto prox = [&](const Vector& v, double step) {
    const double thr = lambda5 * step;
    return Vector(v.unaryExpr([thr](double a) {
      return a > thr ? a - thr : (a < -thr ? a + thr : 0.0);
    }));
  };

  // Power iteration on 0.25 Phi^T W Phi for a starting curvature estimate.
  double lipschitz = 2.0 * lambda4;
  {
    Vector v = Vector::Ones(d) / std::sqrt(static_cast<double>(std::max<Index>(d, 1)));
    double eig = 0.0;
    for (int it = 0; it < 30 && d > 0; ++it) {
      Vector u = embedded.transpose() * (weights.cwiseProduct(embedded * v));
      eig = u.norm();
      if (eig == 0.0) break;
      v = u / eig;
    }
    lipschitz += 0.25 * eig;
  }
  lipschitz = std::max(lipschitz, 1e-12);

  double fx = objective(x);
  Vector y = x;
  double t = 1.0;
  for (int it = 0; it < options.max_iters; ++it) {
    const double fy = smooth(y);
    const Vector gy = smooth_grad(y);
    Vector z;
    for (int bt = 0; bt < 60; ++bt) {
      z = prox(y - gy / lipschitz, 1.0 / lipschitz);
      const Vector diff = z - y;
      if (smooth(z) <= fy + gy.dot(diff) + 0.5 * lipschitz * diff.squaredNorm() + 1e-15 * std::abs(fy)) break;
      lipschitz *= 2.0;
    }
    const double fz = objective(z);
    if (!(fz <= fx)) {
      if (y != x) {  // momentum overshot: restart from the last iterate
        y = x;
        t = 1.0;
        continue;
      }
      break;  // a plain proximal step cannot improve
    }
    const double change = (fx - fz) / std::max(std::abs(fx), 1e-300);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - x);
    x = z;
    fx = fz;
    t = t_next;
    if (change < options.rel_tol) break;
  }
  return x;
}

FitState FitState::initial(const BinaryDataset& data, const HyperParams& hyper, bool embedded) {
  hyper.validate();
  FitState s;
  s.data = &data;
  s.embedded = embedded;
  s.hyper = hyper;
  s.balance_features = hyper.balance_interactions && !embedded ? with_interactions(data.features())
                                                               : data.features();
  s.omega = Vector::Ones(data.n());
  if (embedded) {
    std::vector<Index> sizes{data.p()};
    if (hyper.hidden_layers.empty()) {
      sizes = default_layer_sizes(data.p(), hyper.depth);
    } else {
      sizes.insert(sizes.end(), hyper.hidden_layers.begin(), hyper.hidden_layers.end());
    }
    std::mt19937_64 rng(hyper.seed);
    s.theta = AutoEncoderParams::random(std::move(sizes), rng);
  } else {
    s.theta = AutoEncoderParams::zeros({data.p()});
  }
  s.beta = Vector::Zero(s.theta.code_dim());
  return s;
}

LossBreakdown evaluate(const FitState& state) { return evaluate_impl(state, true); }

Vector grad_beta(const FitState& s) {
  const Matrix phi = s.embedded ? encode_batch(s.theta, s.data->features()) : s.data->features();
  const Vector sign = margins_sign(s.data->outcome());
  const Vector z = phi * s.beta;
  const Vector w = s.weights();
  Vector r(z.size());
  for (Index i = 0; i < z.size(); ++i) r(i) = w(i) * sign(i) * sigmoid(sign(i) * z(i));
  Vector g = phi.transpose() * r + 2.0 * s.hyper.lambda4 * s.beta;
  g += s.hyper.lambda5 * s.beta.unaryExpr([](double b) { return double((b > 0) - (b < 0)); });
  return g;
}

Vector grad_omega(const FitState& state) {
  const WeightObjective obj(state);
  const Vector w = state.weights();
  return (2.0 * state.omega.array() * obj.grad(w).array()).matrix();
}

AutoEncoderParams grad_theta(const FitState& s) {
  const Matrix& x = s.data->features();
  const Vector w = s.weights();
  if (!s.embedded || s.theta.depth() == 0) return s.theta.zeros_like();

  const EncoderTrace trace = encode_trace(s.theta, x);
  const Vector z = trace.code() * s.beta;
  const Vector sign = margins_sign(s.data->outcome());
  Vector dz(z.size());
  for (Index i = 0; i < z.size(); ++i) dz(i) = w(i) * sign(i) * sigmoid(sign(i) * z(i));
  const Matrix upstream = dz * s.beta.transpose();

  AutoEncoderParams grads = autoenc_grads(s.theta, x, w, upstream, s.hyper.lambda2, s.hyper.lambda7);
  if (s.hyper.lambda1 != 0.0) {
    const auto traces = treatment_traces(s.theta, x);
    std::vector<Matrix> codes;
    codes.reserve(traces.size());
    for (const auto& t : traces) codes.push_back(t.code());
    const BalanceGradient bal = balance_with_gradient(x, w, codes, true);
    for (std::size_t j = 0; j < traces.size(); ++j) {
      accumulate_encoder_grads(s.theta, traces[j], s.hyper.lambda1 * bal.d_covariates[j], grads);
    }
  }
  return grads;
}

StepResult update_w(FitState& state, double step) {
  const WeightObjective obj(state);
  const Vector w0 = state.weights();
  const double base = obj.value(w0);
  const Vector g = (2.0 * state.omega.array() * obj.grad(w0).array()).matrix();

  StepResult result{true, step, base};
  if (g.isZero(0.0) || !g.allFinite()) return result;
  double s = step;
  for (int h = 0; h <= kMaxHalvings; ++h, s *= 0.5) {
    const Vector omega = state.omega - s * g;
    const double trial = obj.value(omega.array().square().matrix());
    if (std::isfinite(trial) && trial < base) {
      state.omega = omega;
      return {false, s, trial};
    }
  }
  result.step = s * 2.0;
  return result;
}

StepResult update_theta(FitState& state, double step) {
  StepResult result{true, step, evaluate_impl(state, false).mix};
  if (!state.embedded || state.theta.depth() == 0) return result;
  const double base = result.loss;
  const AutoEncoderParams g = grad_theta(state);
  if (g.dot(g) == 0.0) return result;

  const AutoEncoderParams start = state.theta;
  double s = step;
  for (int h = 0; h <= kMaxHalvings; ++h, s *= 0.5) {
    state.theta = start;
    state.theta.add_scaled(g, -s);
    if (!state.theta.all_finite()) continue;
    const double trial = evaluate_impl(state, false).mix;
    if (std::isfinite(trial) && trial < base) return {false, s, trial};
  }
  state.theta = start;
  result.step = s * 2.0;
  return result;
}

void refit_beta(FitState& state, const BetaSolverOptions& options) {
  const Matrix phi = state.embedded ? encode_batch(state.theta, state.data->features())
                                    : state.data->features();
  state.beta = update_beta(phi, state.data->outcome(), state.weights(), state.hyper.lambda4,
                           state.hyper.lambda5, state.beta, options);
}

namespace {

void require_two_classes(const BinaryDataset& data) {
  const double ones = data.outcome().sum();
  if (ones == 0.0 || ones == static_cast<double>(data.n())) {
    throw Error(ErrorKind::kInvalidTrainingData, "training outcome has a single class");
  }
}

FitResult run_fit(Method method, const BinaryDataset& data, HyperParams hyper) {
  require_two_classes(data);
  const bool embedded = method == Method::kDLR || method == Method::kDGBR;
  const bool learn_w = method == Method::kGBR || method == Method::kDGBR;
  if (!learn_w) hyper.lambda1 = 0.0;
  if (!embedded) {
    hyper.depth = 0;
    hyper.hidden_layers.clear();
  }

  FitState state = FitState::initial(data, hyper, embedded);
  FitTrace trace;
  LossBreakdown prev = evaluate(state);
  trace.records.push_back({0, prev.mix, prev.pre, prev.bal, prev.ae, prev.reg, 0.0, 0.0,
                           false, false, false, true});

  const bool learn_theta = embedded && state.theta.depth() > 0;
  const int max_iters = (!learn_w && !learn_theta) ? 1 : hyper.max_outer_iters;
  double step_w = hyper.step_w;
  double step_theta = hyper.step_theta;

  for (int t = 1; t <= max_iters; ++t) {
    const FitState before = state;
    IterationRecord rec;
    rec.iter = t;

    rec.w_updated = learn_w && !(hyper.freeze_w_after && t > *hyper.freeze_w_after);
    if (rec.w_updated) {
      const StepResult r = update_w(state, step_w);
      rec.w_stalled = r.stalled;
      rec.step_w = r.step;
      step_w = r.stalled ? hyper.step_w : 2.0 * r.step;
    }
    refit_beta(state);
    if (learn_theta) {
      const StepResult r = update_theta(state, step_theta);
      rec.theta_stalled = r.stalled;
      rec.step_theta = r.step;
      step_theta = r.stalled ? hyper.step_theta : 2.0 * r.step;
    }

    const LossBreakdown cur = evaluate(state);
    rec.l_mix = cur.mix;
    rec.l_pre = cur.pre;
    rec.l_bal = cur.bal;
    rec.l_ae = cur.ae;
    rec.l_reg = cur.reg;
    rec.accepted = cur.mix <= prev.mix;
    if (!rec.accepted) {
      // rounding in the block solvers can leave L_mix a hair above the
      // previous value; keep the previous state and stop
      state = before;
      trace.records.push_back(rec);
      trace.converged = true;
      break;
    }
    trace.records.push_back(rec);
    const double rel = std::abs(prev.mix - cur.mix) / std::max(std::abs(prev.mix), 1e-300);
    prev = cur;
    if (rel < hyper.tol) {
      trace.converged = true;
      break;
    }
  }

  DgbrModel model;
  model.method = method;
  model.autoenc = state.theta;
  model.beta = state.beta;
  model.weights = SampleWeights{state.omega};
  model.hyper = state.hyper;
  return {std::move(model), std::move(trace)};
}

}  // namespace

FitResult fit_dgbr(const BinaryDataset& data, const HyperParams& hyper) {
  return run_fit(Method::kDGBR, data, hyper);
}

FitResult fit_gbr(const BinaryDataset& data, const HyperParams& hyper) {
  return run_fit(Method::kGBR, data, hyper);
}

FitResult fit_lr(const BinaryDataset& data, double lambda4, double lambda5) {
  HyperParams hyper;
  hyper.lambda4 = lambda4;
  hyper.lambda5 = lambda5;
  return run_fit(Method::kLR, data, hyper);
}

FitResult fit_dlr(const BinaryDataset& data, const HyperParams& hyper) {
  return run_fit(Method::kDLR, data, hyper);
}

FitResult fit(Method method, const BinaryDataset& data, const HyperParams& hyper) {
  return run_fit(method, data, hyper);
}

HyperParams matched_baseline(const HyperParams& hyper, Index n) {
  if (n < 1) throw Error(ErrorKind::kInvalidInput, "n must be positive");
  const double scale = static_cast<double>(n);
  HyperParams out = hyper;
  out.lambda2 /= scale;
  out.lambda4 *= scale;
  out.lambda5 *= scale;
  out.lambda7 *= scale;
  return out;
}

std::string FitTrace::to_csv() const {
  std::string out =
      "iter,l_mix,l_pre,l_bal,l_ae,l_reg,step_w,step_theta,w_updated,w_stalled,theta_stalled,accepted\n";
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%d\n", r.iter,
                  r.l_mix, r.l_pre, r.l_bal, r.l_ae, r.l_reg, r.step_w, r.step_theta,
                  r.w_updated ? 1 : 0, r.w_stalled ? 1 : 0, r.theta_stalled ? 1 : 0,
                  r.accepted ? 1 : 0);
    out += buf;
  }
  return out;
}

// ---- serialization ----

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Matrix matrix_from(const json& rows, Index r, Index c) {
  if (!rows.is_array() || static_cast<Index>(rows.size()) != r) {
    throw Error(ErrorKind::kSchema, "checkpoint matrix has wrong row count");
  }
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) {
      throw Error(ErrorKind::kSchema, "checkpoint matrix has wrong column count");
    }
    for (Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

Vector vector_from(const json& v) {
  const auto values = v.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

json hyper_json(const HyperParams& h) {
  json j{{"lambda1", h.lambda1}, {"lambda2", h.lambda2}, {"lambda3", h.lambda3},
         {"lambda4", h.lambda4}, {"lambda5", h.lambda5}, {"lambda6", h.lambda6},
         {"lambda7", h.lambda7}, {"max_outer_iters", h.max_outer_iters},
         {"tol", h.tol},         {"step_w", h.step_w},   {"step_theta", h.step_theta},
         {"seed", h.seed},       {"depth", h.depth},     {"hidden_layers", h.hidden_layers},
         {"balance_interactions", h.balance_interactions}};
  j["freeze_w_after"] = h.freeze_w_after ? json(*h.freeze_w_after) : json(nullptr);
  return j;
}

HyperParams hyper_from(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kConfig, "hyperparameters must be a JSON object");
  static const std::vector<std::string> known{
      "lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "lambda6", "lambda7",
      "max_outer_iters", "tol", "step_w", "step_theta", "seed", "depth", "hidden_layers",
      "balance_interactions", "freeze_w_after"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorKind::kConfig, "unknown hyperparameter '" + key + "'");
    }
  }
  HyperParams h;
  try {
    h.lambda1 = j.value("lambda1", h.lambda1);
    h.lambda2 = j.value("lambda2", h.lambda2);
    h.lambda3 = j.value("lambda3", h.lambda3);
    h.lambda4 = j.value("lambda4", h.lambda4);
    h.lambda5 = j.value("lambda5", h.lambda5);
    h.lambda6 = j.value("lambda6", h.lambda6);
    h.lambda7 = j.value("lambda7", h.lambda7);
    h.max_outer_iters = j.value("max_outer_iters", h.max_outer_iters);
    h.tol = j.value("tol", h.tol);
    h.step_w = j.value("step_w", h.step_w);
    h.step_theta = j.value("step_theta", h.step_theta);
    h.seed = j.value("seed", h.seed);
    h.depth = j.value("depth", h.depth);
    h.hidden_layers = j.value("hidden_layers", h.hidden_layers);
    h.balance_interactions = j.value("balance_interactions", h.balance_interactions);
    if (j.contains("freeze_w_after") && !j.at("freeze_w_after").is_null()) {
      h.freeze_w_after = j.at("freeze_w_after").get<int>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("bad hyperparameter value: ") + e.what());
  }
  h.validate();
  return h;
}

}  // namespace

std::string to_json(const HyperParams& hyper) { return hyper_json(hyper).dump(2); }

HyperParams hyper_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  return hyper_from(j);
}

std::string to_json(const DgbrModel& model) {
  json j;
  j["method"] = method_name(model.method);
  j["layer_sizes"] = model.autoenc.layer_sizes;
  json enc = json::array();
  json dec = json::array();
  for (std::size_t k = 0; k < model.autoenc.enc_w.size(); ++k) {
    enc.push_back({{"weights", matrix_json(model.autoenc.enc_w[k])},
                   {"bias", vector_json(model.autoenc.enc_b[k])}});
    dec.push_back({{"weights", matrix_json(model.autoenc.dec_w[k])},
                   {"bias", vector_json(model.autoenc.dec_b[k])}});
  }
  j["encoder"] = std::move(enc);
  j["decoder"] = std::move(dec);
  j["beta"] = vector_json(model.beta);
  j["sample_weights"] = vector_json(model.weights.weights());
  j["hyper"] = hyper_json(model.hyper);
  return j.dump(2);
}

DgbrModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, e.what());
  }
  try {
    DgbrModel model;
    model.method = parse_method(j.at("method").get<std::string>());
    model.autoenc = AutoEncoderParams::zeros(j.at("layer_sizes").get<std::vector<Index>>());
    const auto& l = model.autoenc.layer_sizes;
    const auto& enc = j.at("encoder");
    const auto& dec = j.at("decoder");
    if (enc.size() + 1 != l.size() || dec.size() + 1 != l.size()) {
      throw Error(ErrorKind::kSchema, "checkpoint layer count does not match layer_sizes");
    }
    for (std::size_t k = 0; k + 1 < l.size(); ++k) {
      model.autoenc.enc_w[k] = matrix_from(enc[k].at("weights"), l[k + 1], l[k]);
      model.autoenc.enc_b[k] = vector_from(enc[k].at("bias"));
      model.autoenc.dec_w[k] = matrix_from(dec[k].at("weights"), l[k], l[k + 1]);
      model.autoenc.dec_b[k] = vector_from(dec[k].at("bias"));
      if (model.autoenc.enc_b[k].size() != l[k + 1] || model.autoenc.dec_b[k].size() != l[k]) {
        throw Error(ErrorKind::kSchema, "checkpoint bias has wrong length");
      }
    }
    model.beta = vector_from(j.at("beta"));
    if (model.beta.size() != model.autoenc.code_dim()) {
      throw Error(ErrorKind::kSchema, "checkpoint beta length does not match the code layer");
    }
    model.weights = SampleWeights::from_weights(vector_from(j.at("sample_weights")));
    model.hyper = hyper_from(j.at("hyper"));
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("malformed model checkpoint: ") + e.what());
  }
}

}  // namespace dgbr

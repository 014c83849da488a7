#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgbr/autoenc.hpp"
#include "dgbr/balancing.hpp"
#include "dgbr/core.hpp"

namespace dgbr {

enum class Method { kLR, kDLR, kGBR, kDGBR };

std::string method_name(Method m);
Method parse_method(const std::string& name);

/// Penalty multipliers of the mixed objective
///   L_mix = L_pre + l1 L_bal + l2 L_ae + l3 ||W||^2 + l4 ||b||^2 + l5 ||b||_1
///           + l6 (sum W - 1)^2 + l7 sum_k (||A_k||^2 + ||A^_k||^2)
/// plus optimizer settings.
struct HyperParams {
  // Scaled for learned weights, whose total is pulled towards 1 by lambda6.
  double lambda1 = 1000.0;
  double lambda2 = 1.0;
  double lambda3 = 2000.0;
  double lambda4 = 1e-6;
  double lambda5 = 1e-5;
  double lambda6 = 100.0;
  double lambda7 = 1e-5;
  int max_outer_iters = 200;
  double tol = 1e-6;
  double step_w = 0.05;
  double step_theta = 0.05;
  std::optional<int> freeze_w_after;
  std::uint64_t seed = 0;
  /// Hidden layer widths l_1..l_K; empty means default_layer_sizes(p, depth).
  std::vector<Index> hidden_layers;
  int depth = 2;
  /// Balance pairwise products X_a X_b as extra columns (raw balancing only).
  bool balance_interactions = false;

  void validate() const;
};

/// Fitted predictor: embedding, coefficients and the learned sample weights.
struct DgbrModel {
  Method method = Method::kLR;
  AutoEncoderParams autoenc;  // depth 0 means the identity embedding
  Vector beta;
  SampleWeights weights;
  HyperParams hyper;

  Matrix embed(const Matrix& features) const;
  Vector predict_proba(const Matrix& features) const;
};

struct IterationRecord {
  int iter = 0;
  double l_mix = 0.0;
  double l_pre = 0.0;
  double l_bal = 0.0;
  double l_ae = 0.0;
  double l_reg = 0.0;
  double step_w = 0.0;
  double step_theta = 0.0;
  bool w_updated = false;
  bool w_stalled = false;
  bool theta_stalled = false;
  bool accepted = true;
};

struct FitTrace {
  std::vector<IterationRecord> records;  // records[0] is the initial state
  bool converged = false;

  std::string to_csv() const;
};

struct FitResult {
  DgbrModel model;
  FitTrace trace;
};

struct LossBreakdown {
  double pre = 0.0;
  double bal = 0.0;
  double ae = 0.0;
  double reg = 0.0;
  double mix = 0.0;
};

/// sum_i W_i log(1 + exp((1 - 2 Y_i) * embedded_i . beta))
double loss_pre(const Matrix& embedded, const Vector& outcome, const Vector& beta,
                const Vector& weights);

/// log(1 + exp(x)) without overflow.
double softplus(double x);

struct BetaSolverOptions {
  double rel_tol = 1e-8;
  int max_iters = 10000;
};

/// Weighted elastic-net logistic regression
///   min_b  loss_pre(b) + lambda4 ||b||^2 + lambda5 ||b||_1
/// by accelerated proximal gradient with monotone restarts. Starts from
/// `start` when given (else zero) and never returns a worse objective.
Vector update_beta(const Matrix& embedded, const Vector& outcome, const Vector& weights,
                   double lambda4, double lambda5, const std::optional<Vector>& start = {},
                   const BetaSolverOptions& options = {});

/// Mutable optimizer state for one fit.
struct FitState {
  const BinaryDataset* data = nullptr;
  Matrix balance_features;  // columns used as treatments (raw or with interactions)
  bool embedded = false;    // false: identity embedding, no auto-encoder terms
  AutoEncoderParams theta;
  Vector beta;
  Vector omega;
  HyperParams hyper;

  static FitState initial(const BinaryDataset& data, const HyperParams& hyper, bool embedded);
  Vector weights() const { return omega.array().square().matrix(); }
};

LossBreakdown evaluate(const FitState& state);

/// dL_mix/d omega at the current state.
Vector grad_omega(const FitState& state);

/// dL_mix/d beta at the current state; the l1 term contributes
/// lambda5 sign(beta), which is the derivative wherever no entry is zero.
Vector grad_beta(const FitState& state);

/// dL_mix/d theta at the current state (encoder and decoder).
AutoEncoderParams grad_theta(const FitState& state);

struct StepResult {
  bool stalled = false;
  double step = 0.0;   // accepted step (or last one tried when stalled)
  double loss = 0.0;   // L_mix after the update
};

/// One backtracked gradient step on omega; halves the step up to 30 times.
StepResult update_w(FitState& state, double step);

/// One backtracked gradient step on every auto-encoder parameter jointly.
StepResult update_theta(FitState& state, double step);

/// Re-solves the beta subproblem at the current W and theta.
void refit_beta(FitState& state, const BetaSolverOptions& options = {});

FitResult fit_dgbr(const BinaryDataset& data, const HyperParams& hyper);
FitResult fit_gbr(const BinaryDataset& data, const HyperParams& hyper);
FitResult fit_lr(const BinaryDataset& data, double lambda4, double lambda5);
FitResult fit_dlr(const BinaryDataset& data, const HyperParams& hyper);
/// Hyperparameters for a fixed-weight baseline (W = 1, total n) whose
/// penalties have the same relative strength as `hyper` at unit total weight.
HyperParams matched_baseline(const HyperParams& hyper, Index n);

FitResult fit(Method method, const BinaryDataset& data, const HyperParams& hyper);

std::string to_json(const HyperParams& hyper);
HyperParams hyper_from_json(const std::string& text);

/// Checkpoint with the auto-encoder, beta, hyperparameters and final W.
std::string to_json(const DgbrModel& model);
DgbrModel model_from_json(const std::string& text);

}  // namespace dgbr

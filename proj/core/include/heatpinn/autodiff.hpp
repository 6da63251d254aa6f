#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heatpinn/network.hpp"

namespace heatpinn {

// Input derivatives of the scalar network output that an evaluation should
// produce. Second derivatives imply the matching first derivative.
struct DerivativeRequest {
  bool d_dx = false;
  bool d_dt = false;
  bool d2_dx2 = false;
  bool d_dy = false;
  bool d2_dy2 = false;

  static DerivativeRequest none() { return {}; }
  static DerivativeRequest all_1d() { return {true, true, true, false, false}; }
  static DerivativeRequest all_2d() { return {true, true, true, true, true}; }

  /// Labels: d_dx, d_dt, d2_dx2, d_dy, d2_dy2. Throws RequestError otherwise.
  static DerivativeRequest from_labels(std::span<const std::string_view> labels);

  friend bool operator==(const DerivativeRequest&, const DerivativeRequest&) = default;
};

struct EvalResult {
  double value = 0;
  std::optional<double> d_dx;
  std::optional<double> d_dt;
  std::optional<double> d2_dx2;
  std::optional<double> d_dy;
  std::optional<double> d2_dy2;

  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

/// Value and exact input derivatives of the network at one point.
EvalResult evaluate(const NetworkSpec& spec, const ParamStore& params, const InputPoint& point,
                    const DerivativeRequest& request);

std::vector<EvalResult> evaluate_batch(const NetworkSpec& spec, const ParamStore& params,
                                       std::span<const InputPoint> points,
                                       const DerivativeRequest& request);

struct CollocationBatch;
struct LossDefinition;
struct LossBreakdown;

struct LossGradient {
  std::vector<double> gradient;  // one entry per parameter
  std::vector<double> losses;    // per term
  double composite = 0;
  std::size_t clamp_hits = 0;    // engineered exponent arguments clamped
};

/// Gradient of the composite loss with respect to every parameter. Lambdas
/// are treated as constants. Throws NumericError when a loss is not finite.
LossGradient loss_gradient(const NetworkSpec& spec, const ParamStore& params,
                           const CollocationBatch& batch, const LossDefinition& loss_def);

/// Per-term losses without the backward pass.
LossGradient loss_values(const NetworkSpec& spec, const ParamStore& params,
                         const CollocationBatch& batch, const LossDefinition& loss_def);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

/// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate);

}  // namespace heatpinn

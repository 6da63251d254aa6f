#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "heatpinn/autodiff.hpp"
#include "heatpinn/fe_oracle.hpp"
#include "heatpinn/loss.hpp"
#include "heatpinn/network.hpp"
#include "heatpinn/physics.hpp"
#include "heatpinn/sampler.hpp"

namespace heatpinn {

enum class BcMode { fixed, h_inputs };

// The physical problem a network is trained on.
struct HeatProblem {
  MaterialProps material;
  Geometry geometry;
  AirProfile profile = AirProfile::ramp_hold();
  double init_temp = 0;            // degC, uniform
  BcMode bc_mode = BcMode::fixed;
  double h1 = 100;                 // 1D x_min face, W/(m^2 K)
  double h2 = 50;                  // 1D x_max face
  std::array<EdgeBc, 4> edges{};   // 2D: x_min, x_max, y_min, y_max; h = 0 insulated
  double training_window = 0;      // min; 0 means the whole profile
  double h_ref = 100;              // W/(m^2 K)

  void validate() const;
  int dimensionality() const { return geometry.dimensionality(); }
  double window_min() const;
  Scaling scaling() const;
  /// Inputs the network sees: x, [y,] t, and h1, h2 in h-as-inputs mode.
  std::vector<InputLabel> default_inputs() const;
  LossDefinition loss_definition() const;
  SamplingDomain sampling_domain() const;
  /// Air profile nondimensional kink times inside the training window.
  std::vector<double> kink_times_hat() const;
};

struct TrainConfig {
  std::int64_t epochs = 100000;
  double learning_rate = 1e-4;
  std::int64_t normalization_update_interval = 100;
  double normalization_threshold = 0.01;
  SamplerConfig sampler;
  std::int64_t checkpoint_interval = 0;  // 0: only at the end
  std::uint64_t seed = 0;

  void validate() const;
};

struct HistoryRow {
  std::int64_t epoch = 0;
  std::vector<double> losses;
  std::vector<double> lambdas;
  double composite = 0;

  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

// Everything needed to continue training or to predict.
struct TrainState {
  NetworkSpec spec;
  ParamStore params;
  AdamState adam;
  std::vector<double> lambdas;
  std::vector<std::string> term_names;
  std::int64_t epochs_completed = 0;
  std::vector<HistoryRow> history;
  std::size_t clamp_hits = 0;
};

struct TrainHooks {
  // Called every checkpoint_interval epochs and at the end.
  std::function<void(const TrainState&)> on_checkpoint;
  // Called after every epoch.
  std::function<void(const HistoryRow&)> on_epoch;
};

/// Fresh Glorot-initialised state for `spec`.
TrainState initial_state(const HeatProblem& problem, const NetworkSpec& spec,
                         const TrainConfig& config);

/// Runs config.epochs further epochs on `state` (continuing its epoch
/// numbering). Throws NumericError on a non-finite loss; the state passed in
/// is left at the last completed epoch.
void train(const HeatProblem& problem, const TrainConfig& config, TrainState& state,
           const TrainHooks& hooks = {});

/// Convenience wrapper: initial_state + train.
TrainState train(const HeatProblem& problem, const NetworkSpec& spec, const TrainConfig& config,
                 const TrainHooks& hooks = {});

void write_history_csv(std::ostream& os, const std::vector<std::string>& term_names,
                       const std::vector<HistoryRow>& history, bool header = true);

/// Evaluates a trained network in physical units.
class Predictor {
 public:
  Predictor(NetworkSpec spec, ParamStore params, Scaling scaling, int dimensionality);

  /// Temperature in degC. Throws DomainError for t beyond the trained window
  /// unless `allow_extrapolation`.
  double temperature(const PhysicalPoint& p) const;
  std::vector<double> temperatures(const std::vector<PhysicalPoint>& pts) const;

  void require_dimensionality(int dims) const;
  void allow_extrapolation(bool allow) { extrapolate_ = allow; }
  const Scaling& scaling() const { return scaling_; }
  const NetworkSpec& spec() const { return spec_; }

 private:
  void check(const PhysicalPoint& p) const;

  NetworkSpec spec_;
  ParamStore params_;
  Scaling scaling_;
  int dims_;
  bool extrapolate_ = false;
};

/// FE oracle run of the same problem up to `t_end_s`.
FieldHistory solve_fe(const HeatProblem& problem, const MeshConfig& mesh);

}  // namespace heatpinn

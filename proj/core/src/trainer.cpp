#include "heatpinn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "heatpinn/errors.hpp"

namespace heatpinn {

void HeatProblem::validate() const {
  material.validate();
  geometry.validate();
  if (!std::isfinite(init_temp)) throw ContractError("problem: init_temp must be finite");
  if (!(h_ref > 0)) throw ContractError("problem: h_ref must be > 0");
  if (training_window < 0 || training_window > profile.total_duration()) {
    throw ContractError("problem: training_window must lie within the air profile duration");
  }
  if (dimensionality() == 1) {
    if (bc_mode == BcMode::fixed && (!(h1 > 0) || !(h2 > 0))) {
      throw ContractError(
          "problem: fixed h1, h2 must be > 0 for training (insulated faces: use the FE oracle)");
    }
  } else {
    if (bc_mode == BcMode::h_inputs) {
      throw ContractError("problem: h-as-inputs mode is only supported for 1D problems");
    }
    for (const auto& e : edges) {
      if (!(e.h >= 0)) throw ContractError("problem: edge h must be >= 0");
    }
  }
}

double HeatProblem::window_min() const {
  return training_window > 0 ? training_window : profile.total_duration();
}

Scaling HeatProblem::scaling() const {
  Scaling s;
  s.length_ref = geometry.lx;
  s.length_ref_y = geometry.ly.value_or(1.0);
  s.time_ref = window_min() * 60.0;
  const double peak =
      std::max({std::abs(profile.max_temp()), std::abs(profile.min_temp()), std::abs(init_temp)});
  s.temp_ref = peak > 0 ? peak : 1.0;
  s.h_ref = h_ref;
  return s;
}

std::vector<InputLabel> HeatProblem::default_inputs() const {
  std::vector<InputLabel> labels{InputLabel::x};
  if (dimensionality() == 2) labels.push_back(InputLabel::y);
  labels.push_back(InputLabel::t);
  if (bc_mode == BcMode::h_inputs) {
    labels.push_back(InputLabel::h1);
    labels.push_back(InputLabel::h2);
  }
  return labels;
}

std::vector<double> HeatProblem::kink_times_hat() const {
  std::vector<double> out;
  const double window = window_min();
  for (double k : kink_times(profile)) {
    if (k <= window) out.push_back(k / window);
  }
  return out;
}

LossDefinition HeatProblem::loss_definition() const {
  validate();
  const Scaling s = scaling();
  LossDefinition def;
  def.pde = pde_coefficients(material, s, dimensionality());
  def.profile = profile;
  def.time_ref_min = window_min();
  def.temp_ref = s.temp_ref;
  def.initial_temp_hat = init_temp / s.temp_ref;
  const double fx = material.k / (h_ref * s.length_ref);
  if (dimensionality() == 1) {
    def.boundaries.push_back({Edge::x_min, false, fx, HSource::point_h1, h1 / h_ref});
    def.boundaries.push_back({Edge::x_max, false, fx, HSource::point_h2, h2 / h_ref});
  } else {
    const double fy = material.k / (h_ref * s.length_ref_y);
    for (int e = 0; e < 4; ++e) {
      const Edge edge = static_cast<Edge>(e);
      const bool x_axis = edge == Edge::x_min || edge == Edge::x_max;
      const double h = edges[static_cast<std::size_t>(e)].h;
      def.boundaries.push_back({edge, h == 0, x_axis ? fx : fy, HSource::fixed, h / h_ref});
    }
  }
  def.lambdas.assign(def.term_count(), 1.0);
  return def;
}

SamplingDomain HeatProblem::sampling_domain() const {
  SamplingDomain d;
  d.dimensionality = dimensionality();
  if (d.dimensionality == 2) d.boundary_edges = {Edge::x_min, Edge::x_max, Edge::y_min, Edge::y_max};
  d.kink_times = kink_times_hat();
  d.h_as_inputs = bc_mode == BcMode::h_inputs;
  d.fixed_h1 = h1 / h_ref;
  d.fixed_h2 = h2 / h_ref;
  d.h_ref = h_ref;
  return d;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("training: epochs must be >= 1");
  if (!(learning_rate > 0)) throw ContractError("training: learning_rate must be > 0");
  if (normalization_update_interval < 1) {
    throw ContractError("training: normalization_update_interval must be >= 1");
  }
  if (checkpoint_interval < 0) throw ContractError("training: checkpoint_interval must be >= 0");
  sampler.validate();
}

TrainState initial_state(const HeatProblem& problem, const NetworkSpec& spec,
                         const TrainConfig& config) {
  problem.validate();
  spec.validate();
  if (spec.dimensionality() != problem.dimensionality()) {
    throw ContractError("network inputs do not match the problem dimensionality");
  }
  if (problem.bc_mode == BcMode::h_inputs &&
      (!spec.has_input(InputLabel::h1) || !spec.has_input(InputLabel::h2))) {
    throw ContractError("h-as-inputs problem needs h1 and h2 network inputs");
  }
  TrainState state;
  state.spec = spec;
  state.params = init_glorot(spec, config.seed);
  state.adam = AdamState(state.params.size());
  const auto def = problem.loss_definition();
  state.lambdas = def.lambdas;
  state.term_names = def.term_names();
  return state;
}

void train(const HeatProblem& problem, const TrainConfig& config, TrainState& state,
           const TrainHooks& hooks) {
  config.validate();
  LossDefinition def = problem.loss_definition();
  if (state.lambdas.size() != def.term_count()) state.lambdas.assign(def.term_count(), 1.0);
  const SamplingDomain domain = problem.sampling_domain();
  SamplerConfig sampler = config.sampler;
  sampler.seed = config.seed;

  const std::int64_t first = state.epochs_completed;
  const std::int64_t last = first + config.epochs;
  for (std::int64_t epoch = first; epoch < last; ++epoch) {
    const CollocationBatch batch = sample_batch(sampler, domain, epoch);
    LossGradient lg;
    try {
      if (epoch % config.normalization_update_interval == 0) {
        def.lambdas = state.lambdas;
        const auto current = loss_values(state.spec, state.params, batch, def);
        state.lambdas = update_normalization(current.losses, config.normalization_threshold);
      }
      def.lambdas = state.lambdas;
      lg = loss_gradient(state.spec, state.params, batch, def);
    } catch (const NumericError& err) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + err.what());
    }
    for (double g : lg.gradient) {
      if (!std::isfinite(g)) {
        throw NumericError("epoch " + std::to_string(epoch) + ": non-finite gradient");
      }
    }
    adam_step(state.params.values(), lg.gradient, state.adam, config.learning_rate);
    state.clamp_hits += lg.clamp_hits;
    HistoryRow row{epoch, lg.losses, state.lambdas, lg.composite};
    state.history.push_back(row);
    state.epochs_completed = epoch + 1;
    if (hooks.on_epoch) hooks.on_epoch(row);
    const bool due = config.checkpoint_interval > 0 &&
                     state.epochs_completed % config.checkpoint_interval == 0;
    if (hooks.on_checkpoint && (due || epoch + 1 == last)) hooks.on_checkpoint(state);
  }
}

TrainState train(const HeatProblem& problem, const NetworkSpec& spec, const TrainConfig& config,
                 const TrainHooks& hooks) {
  TrainState state = initial_state(problem, spec, config);
  train(problem, config, state, hooks);
  return state;
}

void write_history_csv(std::ostream& os, const std::vector<std::string>& term_names,
                       const std::vector<HistoryRow>& history, bool header) {
  if (header) {
    os << "epoch";
    for (const auto& n : term_names) os << ",loss_" << n;
    for (const auto& n : term_names) os << ",lambda_" << n;
    os << ",composite\n";
  }
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const auto& row : history) {
    os << row.epoch;
    for (double l : row.losses) os << ',' << num(l);
    for (double l : row.lambdas) os << ',' << num(l);
    os << ',' << num(row.composite) << '\n';
  }
}

Predictor::Predictor(NetworkSpec spec, ParamStore params, Scaling scaling, int dimensionality)
    : spec_(std::move(spec)), params_(std::move(params)), scaling_(scaling), dims_(dimensionality) {
  spec_.validate();
  scaling_.validate();
  if (params_.size() != parameter_count(spec_)) {
    throw ContractError("predictor: parameter count does not match the network spec");
  }
  if (spec_.dimensionality() != dims_) {
    throw ContractError("predictor: spec dimensionality does not match");
  }
}

void Predictor::require_dimensionality(int dims) const {
  if (dims != dims_) {
    throw ContractError("model was trained for a " + std::to_string(dims_) +
                        "D problem but a " + std::to_string(dims) + "D prediction was requested");
  }
}

void Predictor::check(const PhysicalPoint& p) const {
  const double t_hat = p.t / scaling_.time_ref;
  if (!(t_hat >= 0)) throw DomainError("predictor: negative time");
  if (t_hat > 1.0 + 1e-12 && !extrapolate_) {
    throw DomainError("predictor: t = " + std::to_string(p.t) +
                      " s is beyond the trained window of " + std::to_string(scaling_.time_ref) +
                      " s (enable extrapolation to allow)");
  }
  const double tol = 1e-9;
  const double xh = p.x / scaling_.length_ref;
  if (xh < -tol || xh > 1 + tol) throw DomainError("predictor: x outside the part");
  if (dims_ == 2) {
    const double yh = p.y / scaling_.length_ref_y;
    if (yh < -tol || yh > 1 + tol) throw DomainError("predictor: y outside the part");
  }
}

double Predictor::temperature(const PhysicalPoint& p) const {
  check(p);
  return redimensionalize_temperature(forward(spec_, params_, nondimensionalize(p, scaling_)),
                                      scaling_);
}

std::vector<double> Predictor::temperatures(const std::vector<PhysicalPoint>& pts) const {
  std::vector<InputPoint> in;
  in.reserve(pts.size());
  for (const auto& p : pts) {
    check(p);
    in.push_back(nondimensionalize(p, scaling_));
  }
  const auto res = evaluate_batch(spec_, params_, in, DerivativeRequest::none());
  std::vector<double> out;
  out.reserve(res.size());
  for (const auto& r : res) out.push_back(redimensionalize_temperature(r.value, scaling_));
  return out;
}

FieldHistory solve_fe(const HeatProblem& problem, const MeshConfig& mesh) {
  if (problem.dimensionality() == 1) {
    return solve_1d(problem.material, problem.geometry.lx, problem.h1, problem.h2,
                    problem.profile, problem.init_temp, mesh);
  }
  return solve_2d(problem.material, problem.geometry.lx, *problem.geometry.ly, problem.edges,
                  problem.profile, problem.init_temp, mesh);
}

}  // namespace heatpinn

#include "heatpinn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "heatpinn/errors.hpp"

namespace heatpinn {

double BoundaryCondition::h_hat(const InputPoint& p) const {
  switch (h_source) {
    case HSource::point_h1: return p.h1;
    case HSource::point_h2: return p.h2;
    case HSource::fixed: return fixed_h_hat;
  }
  return fixed_h_hat;
}

double LossDefinition::air_temp_hat(double t_hat) const {
  return air_temperature(profile, t_hat * time_ref_min) / temp_ref;
}

std::vector<std::string> LossDefinition::term_names() const {
  std::vector<std::string> names{"pde"};
  for (std::size_t i = 0; i <= boundaries.size(); ++i) names.push_back("bc" + std::to_string(i));
  return names;
}

double AffineResidual::apply(const EvalResult& e) const {
  auto need = [](const std::optional<double>& v, double coeff, const char* name) {
    if (coeff == 0) return 0.0;
    if (!v) throw ContractError(std::string("residual needs ") + name + " but it was not evaluated");
    return coeff * *v;
  };
  return offset + value * e.value + need(e.d_dx, d_dx, "d_dx") + need(e.d_dt, d_dt, "d_dt") +
         need(e.d2_dx2, d2_dx2, "d2_dx2") + need(e.d_dy, d_dy, "d_dy") +
         need(e.d2_dy2, d2_dy2, "d2_dy2");
}

AffineResidual pde_form(const PdeCoefficients& coeffs) {
  AffineResidual r;
  r.d_dt = -1;
  r.d2_dx2 = coeffs.diffusion_x;
  r.d2_dy2 = coeffs.diffusion_y;
  return r;
}

namespace {

bool is_min_side(Edge side) { return side == Edge::x_min || side == Edge::y_min; }
bool is_x_axis(Edge side) { return side == Edge::x_min || side == Edge::x_max; }

}  // namespace

AffineResidual bc_form(Edge side, double air_hat, double h_hat, double conduction_factor) {
  if (!(h_hat > 0)) {
    throw ContractError(
        "bc_residual: h must be > 0; model insulated edges with insulated_residual or run the "
        "FE oracle");
  }
  const double g = conduction_factor / h_hat;
  AffineResidual r;
  const double sign = is_min_side(side) ? -1.0 : 1.0;
  r.offset = sign * air_hat;
  r.value = -sign;
  (is_x_axis(side) ? r.d_dx : r.d_dy) = -g;
  return r;
}

AffineResidual insulated_form(Edge side) {
  AffineResidual r;
  (is_x_axis(side) ? r.d_dx : r.d_dy) = is_min_side(side) ? -1.0 : 1.0;
  return r;
}

AffineResidual ic_form(double target_hat) {
  AffineResidual r;
  r.offset = target_hat;
  r.value = -1;
  return r;
}

double pde_residual(const EvalResult& eval, const PdeCoefficients& coeffs) {
  if (!eval.d_dt || !eval.d2_dx2) throw ContractError("pde_residual: needs d_dt and d2_dx2");
  if (coeffs.diffusion_y != 0 && !eval.d2_dy2) throw ContractError("pde_residual: needs d2_dy2");
  return pde_form(coeffs).apply(eval);
}

double bc_residual(Edge side, const EvalResult& eval, double air_hat, double h_hat,
                   double conduction_factor) {
  return bc_form(side, air_hat, h_hat, conduction_factor).apply(eval);
}

double insulated_residual(Edge side, const EvalResult& eval) {
  return insulated_form(side).apply(eval);
}

double ic_residual(const EvalResult& eval, double target_hat) {
  return ic_form(target_hat).apply(eval);
}

LossBreakdown composite_loss(const std::vector<std::vector<double>>& residuals,
                             const std::vector<double>& lambdas, std::vector<std::string> names) {
  if (residuals.size() != lambdas.size()) {
    throw ContractError("composite_loss: " + std::to_string(residuals.size()) + " terms but " +
                        std::to_string(lambdas.size()) + " lambdas");
  }
  LossBreakdown out;
  if (names.empty()) {
    names.push_back("pde");
    for (std::size_t i = 1; i < residuals.size(); ++i) names.push_back("bc" + std::to_string(i - 1));
  }
  out.names = std::move(names);
  out.lambdas = lambdas;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (residuals[i].empty()) {
      throw ContractError("composite_loss: term '" + out.names.at(i) + "' has no points");
    }
    double sum = 0;
    for (double r : residuals[i]) sum += r * r;
    const double loss = sum / static_cast<double>(residuals[i].size());
    out.losses.push_back(loss);
    out.composite += lambdas[i] * loss;
  }
  return out;
}

std::vector<double> update_normalization(const std::vector<double>& losses, double threshold) {
  if (!(threshold > 0 && threshold <= 1)) {
    throw ContractError("update_normalization: threshold must be in (0, 1]");
  }
  double max_loss = 0;
  for (double l : losses) {
    if (!(l >= 0)) throw ContractError("update_normalization: losses must be >= 0");
    max_loss = std::max(max_loss, l);
  }
  std::vector<double> lambdas(losses.size(), 1.0);
  if (max_loss == 0) return lambdas;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (losses[i] == 0) continue;
    const double ratio = losses[i] / max_loss;
    if (ratio < threshold) lambdas[i] = ratio / threshold;
  }
  return lambdas;
}

}  // namespace heatpinn

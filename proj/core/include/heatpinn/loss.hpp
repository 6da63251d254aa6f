#pragma once

#include <string>
#include <vector>

#include "heatpinn/autodiff.hpp"
#include "heatpinn/physics.hpp"

namespace heatpinn {

// Points for one epoch. Boundary lists follow LossDefinition::boundaries.
struct CollocationBatch {
  std::vector<InputPoint> interior;
  std::vector<InputPoint> initial;
  std::vector<std::vector<InputPoint>> boundaries;
};

enum class HSource { point_h1, point_h2, fixed };

struct BoundaryCondition {
  Edge edge = Edge::x_min;
  bool insulated = false;
  // k / (h_ref * L) for the edge's axis; the gradient term weight is this
  // divided by the nondimensional h of the point.
  double conduction_factor = 1;
  HSource h_source = HSource::point_h1;
  double fixed_h_hat = 1;

  double h_hat(const InputPoint& p) const;
};

// Everything the residuals need besides the network itself.
struct LossDefinition {
  PdeCoefficients pde;
  std::vector<BoundaryCondition> boundaries;
  AirProfile profile;
  double time_ref_min = 1;   // minutes per unit nondimensional time
  double temp_ref = 1;       // degC per unit nondimensional temperature
  double initial_temp_hat = 0;
  std::vector<double> lambdas;  // pde, bc0 (initial), then one per boundary

  std::size_t term_count() const { return 2 + boundaries.size(); }
  double air_temp_hat(double t_hat) const;
  std::vector<std::string> term_names() const;
};

struct LossBreakdown {
  std::vector<std::string> names;
  std::vector<double> losses;
  std::vector<double> lambdas;
  double composite = 0;
};

// Residual written as offset + sum of coefficient * channel. All residuals
// here are affine in the network output and its input derivatives.
struct AffineResidual {
  double offset = 0;
  double value = 0;
  double d_dx = 0;
  double d_dt = 0;
  double d2_dx2 = 0;
  double d_dy = 0;
  double d2_dy2 = 0;

  double apply(const EvalResult& e) const;
};

AffineResidual pde_form(const PdeCoefficients& coeffs);
AffineResidual bc_form(Edge side, double air_hat, double h_hat, double conduction_factor);
AffineResidual insulated_form(Edge side);
AffineResidual ic_form(double target_hat);

/// diffusion_x f_xx (+ diffusion_y f_yy) - f_t.
double pde_residual(const EvalResult& eval, const PdeCoefficients& coeffs);

/// Convective boundary residual. With g = conduction_factor / h_hat:
///   min side: -(Tinf - f) - g df/dx   max side: (Tinf - f) - g df/dx
/// i.e. the gradient term uses the outward normal derivative.
double bc_residual(Edge side, const EvalResult& eval, double air_hat, double h_hat,
                   double conduction_factor);

/// Zero-flux residual (outward normal derivative) for insulated edges.
double insulated_residual(Edge side, const EvalResult& eval);

/// target - f at t = 0.
double ic_residual(const EvalResult& eval, double target_hat);

/// Mean squared residual per term and sum of lambda-weighted terms.
LossBreakdown composite_loss(const std::vector<std::vector<double>>& residuals,
                             const std::vector<double>& lambdas,
                             std::vector<std::string> names = {});

/// Ratio of each loss to the largest; 1 at or above the threshold, otherwise
/// ratio / threshold. Zero losses get 1.
std::vector<double> update_normalization(const std::vector<double>& losses,
                                         double threshold = 0.01);

}  // namespace heatpinn

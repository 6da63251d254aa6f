#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "heatpinn/input_point.hpp"

namespace heatpinn {

struct MaterialProps {
  double k = 0.47;     // W/(m K)
  double rho = 1573;   // kg/m^3
  double cp = 967;     // J/(kg K)

  void validate() const;
};

/// Thermal diffusivity k / (rho * cp) in m^2/s.
double thermal_diffusivity(const MaterialProps& props);

// Air temperature programme of an oven cycle. Ramps are given as a rate
// magnitude (degC/min) and a target; the sign of the slope follows from the
// target. After the last segment the temperature is held until
// total_duration.
struct RampSegment {
  double rate = 0;    // degC/min, > 0
  double target = 0;  // degC
};

struct HoldSegment {
  double duration = 0;  // min, > 0
};

using ProfileSegment = std::variant<RampSegment, HoldSegment>;

class AirProfile {
 public:
  struct Breakpoint {
    double time;  // min
    double temp;  // degC
  };

  AirProfile() = default;
  AirProfile(double start_temp, std::vector<ProfileSegment> segments, double total_duration);

  /// The oven cycle used throughout the 1D validation: ramp at 5 degC/min
  /// from 0 degC to 50 degC, then hold. `total_duration` defaults to a 5 min
  /// hold after the ramp.
  static AirProfile ramp_hold(double start_temp = 0, double rate = 5, double hold_temp = 50,
                              double total_duration = 15);

  static AirProfile constant(double temp, double total_duration);

  double start_temp() const noexcept { return start_temp_; }
  double total_duration() const noexcept { return total_duration_; }
  const std::vector<ProfileSegment>& segments() const noexcept { return segments_; }

  /// Corner points of the piecewise-linear curve, including t = 0 and
  /// t = total_duration.
  const std::vector<Breakpoint>& breakpoints() const noexcept { return breakpoints_; }

  double min_temp() const;
  double max_temp() const;

 private:
  double start_temp_ = 0;
  std::vector<ProfileSegment> segments_;
  double total_duration_ = 0;
  std::vector<Breakpoint> breakpoints_;
};

/// Piecewise-linear evaluation; `t_min` in minutes. Throws DomainError outside
/// [0, total_duration].
double air_temperature(const AirProfile& profile, double t_min);

/// Slope of the profile on the segment containing `t_min` (right-sided).
double air_temperature_slope(const AirProfile& profile, double t_min);

/// Times (min) where the ramp rate changes; always contains 0.
std::vector<double> kink_times(const AirProfile& profile);

// Faces of the part. In 1D only x_min/x_max exist.
enum class Edge { x_min = 0, x_max = 1, y_min = 2, y_max = 3 };

struct Geometry {
  double lx = 0.01;               // m
  std::optional<double> ly;       // m, set for 2D

  int dimensionality() const noexcept { return ly ? 2 : 1; }
  void validate() const;
};

// Reference quantities for nondimensional network inputs/outputs.
struct Scaling {
  double length_ref = 1;    // m, x direction
  double length_ref_y = 1;  // m, y direction (2D only)
  double time_ref = 1;      // s
  double temp_ref = 1;      // degC
  double h_ref = 100;       // W/(m^2 K)

  void validate() const;
};

struct PhysicalPoint {
  double x = 0;   // m
  double y = 0;   // m
  double t = 0;   // s
  double h1 = 0;  // W/(m^2 K)
  double h2 = 0;  // W/(m^2 K)
};

InputPoint nondimensionalize(const PhysicalPoint& p, const Scaling& s);
PhysicalPoint redimensionalize(const InputPoint& p, const Scaling& s);
double redimensionalize_temperature(double t_hat, const Scaling& s);
double nondimensionalize_temperature(double temp, const Scaling& s);

// Coefficients of the nondimensional heat equation
//   dT/dt = diffusion_x d2T/dx2 + diffusion_y d2T/dy2
// after scaling x by length_ref, y by length_ref_y and t by time_ref.
struct PdeCoefficients {
  double diffusion_x = 1;
  double diffusion_y = 0;
};

PdeCoefficients pde_coefficients(const MaterialProps& props, const Scaling& s, int dimensionality);

// Truncated cosine series of the insulated-bar problem:
//   T = T0 + (TMax - T0) * sum_n A_n exp(-alpha (n pi / L)^2 t) cos(n pi x / L)
struct SeriesSolution {
  struct Mode {
    int n = 0;
    double weight = 0;
  };
  double base_temp = 0;
  double peak_temp = 1;
  std::vector<Mode> modes;

  void validate() const;
};

/// x in m, t in s.
double analytic_solution(const SeriesSolution& sol, const MaterialProps& props, double length,
                         double x, double t);

/// Analytic d/dx, d2/dx2 and d/dt of the series, used to check the residual.
struct SeriesDerivatives {
  double value, d_dx, d2_dx2, d_dt;
};
SeriesDerivatives analytic_derivatives(const SeriesSolution& sol, const MaterialProps& props,
                                       double length, double x, double t);

/// Cosine-series projection of an initial profile `initial(x)` on [0, L]
/// using `modes` terms (n = 0 .. modes-1).
SeriesSolution fit_cosine_series(const std::function<double(double)>& initial, double length,
                                 double base_temp, double peak_temp, int modes = 50);

}  // namespace heatpinn

#include "heatpinn/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "heatpinn/errors.hpp"

namespace heatpinn {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0; }

}  // namespace

void MaterialProps::validate() const {
  if (!positive_finite(k) || !positive_finite(rho) || !positive_finite(cp)) {
    throw ContractError("material properties k, rho, cp must be strictly positive");
  }
}

double thermal_diffusivity(const MaterialProps& props) {
  props.validate();
  return props.k / (props.rho * props.cp);
}

AirProfile::AirProfile(double start_temp, std::vector<ProfileSegment> segments,
                       double total_duration)
    : start_temp_(start_temp), segments_(std::move(segments)), total_duration_(total_duration) {
  if (!std::isfinite(start_temp_)) throw ContractError("air profile: start_temp must be finite");
  breakpoints_.push_back({0.0, start_temp_});
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& last = breakpoints_.back();
    const std::string where = "air profile segment " + std::to_string(i);
    if (const auto* ramp = std::get_if<RampSegment>(&segments_[i])) {
      if (!positive_finite(ramp->rate)) throw ContractError(where + ": ramp rate must be > 0");
      if (!std::isfinite(ramp->target)) throw ContractError(where + ": target must be finite");
      const double span = std::abs(ramp->target - last.temp);
      if (span == 0) throw ContractError(where + ": ramp target equals current temperature");
      breakpoints_.push_back({last.time + span / ramp->rate, ramp->target});
    } else {
      const auto& hold = std::get<HoldSegment>(segments_[i]);
      if (!positive_finite(hold.duration)) throw ContractError(where + ": hold duration must be > 0");
      breakpoints_.push_back({last.time + hold.duration, last.temp});
    }
  }
  const double last_end = breakpoints_.back().time;
  if (!std::isfinite(total_duration_) || total_duration_ <= 0) {
    throw ContractError("air profile: total_duration must be > 0");
  }
  if (total_duration_ < last_end) {
    throw ContractError("air profile: total_duration " + std::to_string(total_duration_) +
                        " is shorter than the last segment end " + std::to_string(last_end));
  }
  if (total_duration_ > last_end) breakpoints_.push_back({total_duration_, breakpoints_.back().temp});
}

AirProfile AirProfile::ramp_hold(double start_temp, double rate, double hold_temp,
                                 double total_duration) {
  return AirProfile(start_temp, {RampSegment{rate, hold_temp}}, total_duration);
}

AirProfile AirProfile::constant(double temp, double total_duration) {
  return AirProfile(temp, {}, total_duration);
}

double AirProfile::min_temp() const {
  double m = breakpoints_.front().temp;
  for (const auto& b : breakpoints_) m = std::min(m, b.temp);
  return m;
}

double AirProfile::max_temp() const {
  double m = breakpoints_.front().temp;
  for (const auto& b : breakpoints_) m = std::max(m, b.temp);
  return m;
}

double air_temperature(const AirProfile& profile, double t_min) {
  const auto& bp = profile.breakpoints();
  if (bp.empty()) throw ContractError("air profile is empty");
  if (!(t_min >= 0 && t_min <= profile.total_duration())) {
    throw DomainError("air_temperature: t = " + std::to_string(t_min) + " min outside [0, " +
                      std::to_string(profile.total_duration()) + "]");
  }
  // First breakpoint with time >= t.
  auto it = std::lower_bound(bp.begin(), bp.end(), t_min,
                             [](const AirProfile::Breakpoint& b, double t) { return b.time < t; });
  if (it == bp.begin()) return it->temp;
  if (it == bp.end()) return bp.back().temp;
  if (it->time == t_min) return it->temp;
  const auto& a = *(it - 1);
  const auto& b = *it;
  const double w = (t_min - a.time) / (b.time - a.time);
  return a.temp + w * (b.temp - a.temp);
}

double air_temperature_slope(const AirProfile& profile, double t_min) {
  const auto& bp = profile.breakpoints();
  if (!(t_min >= 0 && t_min <= profile.total_duration())) {
    throw DomainError("air_temperature_slope: t outside profile");
  }
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    if (t_min < bp[i + 1].time || i + 2 == bp.size()) {
      return (bp[i + 1].temp - bp[i].temp) / (bp[i + 1].time - bp[i].time);
    }
  }
  return 0;
}

std::vector<double> kink_times(const AirProfile& profile) {
  std::vector<double> kinks{0.0};
  const auto& bp = profile.breakpoints();
  for (std::size_t i = 1; i + 1 < bp.size(); ++i) {
    const double before = (bp[i].temp - bp[i - 1].temp) / (bp[i].time - bp[i - 1].time);
    const double after = (bp[i + 1].temp - bp[i].temp) / (bp[i + 1].time - bp[i].time);
    if (before != after) kinks.push_back(bp[i].time);
  }
  return kinks;
}

void Geometry::validate() const {
  if (!positive_finite(lx)) throw ContractError("geometry: lx must be > 0");
  if (ly && !positive_finite(*ly)) throw ContractError("geometry: ly must be > 0");
}

void Scaling::validate() const {
  if (!positive_finite(length_ref) || !positive_finite(length_ref_y) ||
      !positive_finite(time_ref) || !positive_finite(temp_ref) || !positive_finite(h_ref)) {
    throw ContractError("scaling: all reference quantities must be > 0");
  }
}

InputPoint nondimensionalize(const PhysicalPoint& p, const Scaling& s) {
  return InputPoint{p.x / s.length_ref, p.y / s.length_ref_y, p.t / s.time_ref, p.h1 / s.h_ref,
                    p.h2 / s.h_ref};
}

PhysicalPoint redimensionalize(const InputPoint& p, const Scaling& s) {
  return PhysicalPoint{p.x * s.length_ref, p.y * s.length_ref_y, p.t * s.time_ref,
                       p.h1 * s.h_ref, p.h2 * s.h_ref};
}

double redimensionalize_temperature(double t_hat, const Scaling& s) { return t_hat * s.temp_ref; }

double nondimensionalize_temperature(double temp, const Scaling& s) { return temp / s.temp_ref; }

PdeCoefficients pde_coefficients(const MaterialProps& props, const Scaling& s,
                                 int dimensionality) {
  const double alpha = thermal_diffusivity(props);
  PdeCoefficients c;
  c.diffusion_x = alpha * s.time_ref / (s.length_ref * s.length_ref);
  c.diffusion_y =
      dimensionality == 2 ? alpha * s.time_ref / (s.length_ref_y * s.length_ref_y) : 0.0;
  return c;
}

void SeriesSolution::validate() const {
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i].n < 0) throw ContractError("series solution: negative mode index");
    for (std::size_t j = 0; j < i; ++j) {
      if (modes[j].n == modes[i].n) throw ContractError("series solution: duplicate mode index");
    }
  }
}

SeriesDerivatives analytic_derivatives(const SeriesSolution& sol, const MaterialProps& props,
                                       double length, double x, double t) {
  const double alpha = thermal_diffusivity(props);
  const double amp = sol.peak_temp - sol.base_temp;
  SeriesDerivatives d{sol.base_temp, 0, 0, 0};
  for (const auto& m : sol.modes) {
    const double kn = m.n * std::numbers::pi / length;
    const double rate = alpha * kn * kn;
    const double decay = std::exp(-rate * t);
    const double c = std::cos(kn * x);
    const double s = std::sin(kn * x);
    d.value += amp * m.weight * decay * c;
    d.d_dx += -amp * m.weight * decay * kn * s;
    d.d2_dx2 += -amp * m.weight * decay * kn * kn * c;
    d.d_dt += -amp * m.weight * rate * decay * c;
  }
  return d;
}

double analytic_solution(const SeriesSolution& sol, const MaterialProps& props, double length,
                         double x, double t) {
  const double alpha = thermal_diffusivity(props);
  double sum = 0;
  for (const auto& m : sol.modes) {
    const double kn = m.n * std::numbers::pi / length;
    sum += m.weight * std::exp(-alpha * kn * kn * t) * std::cos(kn * x);
  }
  return sol.base_temp + (sol.peak_temp - sol.base_temp) * sum;
}

SeriesSolution fit_cosine_series(const std::function<double(double)>& initial, double length,
                                 double base_temp, double peak_temp, int modes) {
  if (modes < 1) throw ContractError("fit_cosine_series: modes must be >= 1");
  if (peak_temp == base_temp) throw ContractError("fit_cosine_series: peak_temp == base_temp");
  // Composite Simpson on a grid fine enough for the highest mode.
  const int panels = 2 * std::max(200, 20 * modes);
  const double h = length / panels;
  SeriesSolution sol{base_temp, peak_temp, {}};
  for (int n = 0; n < modes; ++n) {
    const double kn = n * std::numbers::pi / length;
    double acc = 0;
    for (int i = 0; i <= panels; ++i) {
      const double x = i * h;
      const double g = (initial(x) - base_temp) / (peak_temp - base_temp);
      const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * g * std::cos(kn * x);
    }
    acc *= h / 3.0;
    sol.modes.push_back({n, (n == 0 ? 1.0 : 2.0) * acc / length});
  }
  return sol;
}

}  // namespace heatpinn

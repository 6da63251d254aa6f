#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "heatpinn/physics.hpp"

namespace heatpinn {

enum class TimeScheme {
  // Exact integration of the semi-discrete system over each step, with the
  // piecewise-linear air temperature carried as augmented state.
  exponential,
  // First-order implicit stepping.
  backward_euler,
};

struct MeshConfig {
  int elements_per_direction = 10;
  double dt = 5;      // s, output interval and step size
  double t_end = 900;  // s
  TimeScheme scheme = TimeScheme::exponential;

  void validate() const;
};

// Space-time temperature grid. Nodes are flattened as i + nx * j.
struct FieldHistory {
  std::vector<std::vector<double>> axes;   // node coordinates per axis, m
  std::vector<double> times;               // s
  std::vector<std::vector<double>> temps;  // [time][node], degC

  int dimensionality() const noexcept { return static_cast<int>(axes.size()); }
  std::size_t node_count() const noexcept;
  double at(std::size_t time_index, std::size_t i, std::size_t j = 0) const;
};

// Convective coefficient per edge; h = 0 marks an insulated edge.
struct EdgeBc {
  double h = 0;  // W/(m^2 K)
  bool insulated() const noexcept { return h == 0; }
};

FieldHistory solve_1d(const MaterialProps& props, double length, double h1, double h2,
                      const AirProfile& profile, double init_temp, const MeshConfig& mesh);

/// Same as solve_1d but starting from an arbitrary nodal field.
FieldHistory solve_1d_from(const MaterialProps& props, double length, double h1, double h2,
                           const AirProfile& profile, const std::vector<double>& init_field,
                           const MeshConfig& mesh);

/// Edges ordered x_min, x_max, y_min, y_max.
FieldHistory solve_2d(const MaterialProps& props, double lx, double ly,
                      const std::array<EdgeBc, 4>& edges, const AirProfile& profile,
                      double init_temp, const MeshConfig& mesh);

/// Multilinear interpolation in space and linear in time. `y` is ignored for
/// 1D histories. Throws DomainError outside the stored ranges.
double probe(const FieldHistory& history, double x, double y, double t);
inline double probe(const FieldHistory& history, double x, double t) {
  return probe(history, x, 0.0, t);
}

/// Nodal field at time t (linear in time between stored slices).
std::vector<double> slice_at(const FieldHistory& history, double t);

/// Largest violation of [lo, hi] over all slices; 0 when the bound holds.
double max_principle_violation(const FieldHistory& history, double lo, double hi);

// CSV schema shared with PINN-sampled fields: header `time_s,<node>...`
// where a node label is `x` in 1D and `x:y` in 2D (metres); one row per slice.
void write_field_csv(std::ostream& os, const FieldHistory& history);
void write_field_csv(const std::string& path, const FieldHistory& history);
FieldHistory read_field_csv(std::istream& is);

}  // namespace heatpinn

#pragma once

#include <cstdint>
#include <vector>

#include "heatpinn/loss.hpp"

namespace heatpinn {

struct SamplerConfig {
  int batch_per_term = 150;
  double densify_fraction = 0.3;
  double kink_window = 0.05;     // nondimensional time half-width
  double h_min = 20;             // W/(m^2 K)
  double h_max = 200;            // W/(m^2 K)
  std::uint64_t seed = 0;

  void validate() const;
};

// What the sampler needs to know about the problem, in nondimensional units.
struct SamplingDomain {
  int dimensionality = 1;
  std::vector<Edge> boundary_edges{Edge::x_min, Edge::x_max};
  std::vector<double> kink_times;  // nondimensional, within [0, 1]
  bool h_as_inputs = false;
  double fixed_h1 = 1;             // nondimensional, used when !h_as_inputs
  double fixed_h2 = 1;
  double h_ref = 100;              // W/(m^2 K), converts h_min/h_max
};

/// Fresh collocation points for one epoch; a pure function of
/// (config, domain, epoch).
CollocationBatch sample_batch(const SamplerConfig& config, const SamplingDomain& domain,
                              std::int64_t epoch);

}  // namespace heatpinn

#pragma once

namespace heatpinn {

// Nondimensional network input. y is ignored for 1D problems; h1/h2 are
// carried on every point even when they are not network inputs, since the
// boundary residuals need them.
struct InputPoint {
  double x = 0;
  double y = 0;
  double t = 0;
  double h1 = 1;
  double h2 = 1;

  friend bool operator==(const InputPoint&, const InputPoint&) = default;
};

}  // namespace heatpinn

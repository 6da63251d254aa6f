#pragma once

#include <string>

#include "heatpinn/physics.hpp"
#include "heatpinn/trainer.hpp"

namespace heatpinn {

// Checkpoint file layout:
//   8 bytes   magic "HPINNCK1"
//   8 bytes   header length L, little-endian uint64
//   L bytes   JSON header (network spec, slot layout, scaling, optimizer
//             scalars, lambdas, history shape)
//   payload   little-endian float64 arrays in header order: params,
//             adam first moment, adam second moment, history rows
struct Checkpoint {
  TrainState state;
  Scaling scaling;
  int dimensionality = 1;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

}  // namespace heatpinn

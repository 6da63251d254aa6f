#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatpinn/fe_oracle.hpp"
#include "heatpinn/network.hpp"
#include "heatpinn/trainer.hpp"

namespace heatpinn::cli {

// Malformed or inconsistent experiment configuration. The message starts
// with the dotted key path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Probe {
  std::string name;
  double x = 0;  // m
  double y = 0;  // m, 2D only
};

struct CompareSettings {
  std::vector<Probe> probes;              // time traces
  std::vector<double> profile_times_min;  // through-thickness profiles
  int profile_points = 21;
  double dt_s = 5;                        // trace sampling
};

struct SweepSettings {
  std::vector<double> h1;  // W/(m^2 K)
  std::vector<double> h2;
  double time_min = 15;
  int profile_points = 21;
};

struct HeatmapSettings {
  std::vector<double> times_min{5, 10, 15};
  int nx = 61;
  int ny = 21;
};

struct ExperimentConfig {
  std::string name = "experiment";
  HeatProblem problem;
  NetworkSpec network;
  TrainConfig training;
  MeshConfig mesh;  // t_end is the full air-profile duration
  CompareSettings compare;
  SweepSettings sweep;
  HeatmapSettings heatmap;
  std::optional<std::string> output_dir;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

}  // namespace heatpinn::cli

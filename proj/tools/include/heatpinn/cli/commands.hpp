#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "heatpinn/checkpoint.hpp"
#include "heatpinn/cli/config.hpp"

namespace heatpinn::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kNumericError = 3,
  kIoError = 4,
  kDomainError = 5,
};

inline constexpr const char* kOutputRootEnv = "HEATPINN_OUTPUT_ROOT";

/// --out if given, else the config's output_dir, else <root>/<name>, where
/// root is $HEATPINN_OUTPUT_ROOT or "heatpinn_out". A relative output_dir is
/// placed under $HEATPINN_OUTPUT_ROOT when that is set.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg,
                                         const std::optional<std::string>& override_dir);

// Temperatures (degC) at physical points; lets FE and PINN share one code path.
using FieldModel = std::function<std::vector<double>(const std::vector<PhysicalPoint>&)>;

FieldModel fe_model(const FieldHistory& fe);
FieldModel pinn_model(const Predictor& predictor);

struct ProbeDeviation {
  std::string name;
  double max_abs = 0;   // degC
  double mean_abs = 0;  // degC
};

struct CompareReport {
  std::vector<ProbeDeviation> probes;
  std::vector<ProbeDeviation> profiles;  // one per profile time
};

/// Traces each probe over [t_begin, t_end] (s) and samples through-thickness
/// profiles; writes CSVs when `out_dir` is set.
CompareReport compare_models(const ExperimentConfig& cfg, const FieldModel& reference,
                             const FieldModel& model, double t_begin, double t_end,
                             const std::optional<std::filesystem::path>& out_dir);

struct SweepCell {
  double h1 = 0;
  double h2 = 0;
  double max_abs = 0;      // degC over the profile at sweep.time_min
  double fe_seconds = 0;   // one FE solve
  double pinn_seconds = 0; // one PINN profile evaluation
};

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const Predictor& predictor,
                                 const std::optional<std::filesystem::path>& out_dir);

struct HeatmapSlice {
  double time_min = 0;
  double mean_abs = 0;  // PINN vs FE over the grid, degC
  double max_abs = 0;
};

std::vector<HeatmapSlice> run_heatmap(const ExperimentConfig& cfg, const Predictor& predictor,
                                      const std::optional<std::filesystem::path>& out_dir);

// Verb entry points. Each writes into `out_dir` and logs to `log`.
void cmd_fe_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                std::ostream& log);
TrainState cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                     const std::optional<std::string>& resume, std::ostream& log);
CompareReport cmd_compare(const ExperimentConfig& cfg, const Checkpoint& ckpt,
                          const std::filesystem::path& out_dir, bool extrapolate,
                          std::ostream& log);
std::vector<SweepCell> cmd_sweep(const ExperimentConfig& cfg, const Checkpoint& ckpt,
                                 const std::filesystem::path& out_dir, std::ostream& log);
std::vector<HeatmapSlice> cmd_heatmap(const ExperimentConfig& cfg, const Checkpoint& ckpt,
                                      const std::filesystem::path& out_dir, bool extrapolate,
                                      std::ostream& log);

/// Rejects checkpoints whose network or scaling differ from the config.
Predictor predictor_for(const ExperimentConfig& cfg, const Checkpoint& ckpt);

/// Parses arguments and runs one verb; returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace heatpinn::cli

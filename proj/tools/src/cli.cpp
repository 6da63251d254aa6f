#include <filesystem>
#include <ios>
#include <ostream>

#include "CLI11.hpp"
#include "heatpinn/cli/commands.hpp"
#include "heatpinn/errors.hpp"

namespace heatpinn::cli {

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> epochs;
  std::optional<std::string> resume;
  std::optional<std::string> checkpoint;
  std::vector<double> times;
  bool extrapolate = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config, "Experiment JSON")->required();
  cmd->add_option("-o,--out", o.out, "Output directory (overrides config and $" +
                                         std::string(kOutputRootEnv) + ")");
}

void add_checkpoint(CLI::App* cmd, Options& o) {
  cmd->add_option("--checkpoint", o.checkpoint,
                  "Trained checkpoint (default: <out>/checkpoint.bin)");
}

ExperimentConfig configure(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) cfg.training.seed = *o.seed;
  if (o.epochs) {
    if (*o.epochs < 1) throw ConfigError("--epochs: must be >= 1");
    cfg.training.epochs = *o.epochs;
  }
  if (!o.times.empty()) cfg.heatmap.times_min = o.times;
  return cfg;
}

Checkpoint checkpoint_for(const Options& o, const std::filesystem::path& out_dir) {
  return load_checkpoint(o.checkpoint.value_or((out_dir / "checkpoint.bin").string()));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Physics-informed neural network heat-conduction solver", "heatpinn"};
  app.require_subcommand(1);
  Options o;

  auto* fe = app.add_subcommand("fe-run", "Run the finite-difference oracle and write its field CSV");
  add_common(fe, o);

  auto* tr = app.add_subcommand("train", "Train a network; writes checkpoint.bin and train_log.csv");
  add_common(tr, o);
  tr->add_option("--seed", o.seed, "Override training.seed");
  tr->add_option("--epochs", o.epochs, "Override training.epochs (further epochs when resuming)");
  tr->add_option("--resume", o.resume, "Continue from a checkpoint");

  auto* cmp = app.add_subcommand("compare", "Compare a trained network against the FE oracle");
  add_common(cmp, o);
  add_checkpoint(cmp, o);
  cmp->add_flag("--extrapolate", o.extrapolate, "Evaluate beyond the trained time window");

  auto* sw = app.add_subcommand("sweep", "Boundary-coefficient sweep of an h-input network");
  add_common(sw, o);
  add_checkpoint(sw, o);

  auto* hm = app.add_subcommand("heatmap", "2D temperature maps (SVG + CSV) at given times");
  add_common(hm, o);
  add_checkpoint(hm, o);
  hm->add_option("--times", o.times, "Times in minutes (overrides heatmap.times_min)");
  hm->add_flag("--extrapolate", o.extrapolate, "Evaluate beyond the trained time window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const ExperimentConfig cfg = configure(o);
    const auto out_dir = resolve_output_dir(cfg, o.out);
    if (*fe) {
      cmd_fe_run(cfg, out_dir, out);
    } else if (*tr) {
      cmd_train(cfg, out_dir, o.resume, out);
    } else if (*cmp) {
      cmd_compare(cfg, checkpoint_for(o, out_dir), out_dir, o.extrapolate, out);
    } else if (*sw) {
      cmd_sweep(cfg, checkpoint_for(o, out_dir), out_dir, out);
    } else if (*hm) {
      cmd_heatmap(cfg, checkpoint_for(o, out_dir), out_dir, o.extrapolate, out);
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ContractError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kDomainError;
  } catch (const FormatError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace heatpinn::cli

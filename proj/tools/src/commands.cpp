#include "heatpinn/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>

#include "heatpinn/cli/svg.hpp"
#include "heatpinn/errors.hpp"

namespace heatpinn::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw std::ios_base::failure("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::ios_base::failure("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  v.back() = hi;
  return v;
}

// Times t_begin, t_begin + dt, ... with the last sample exactly at t_end.
std::vector<double> sample_times(double t_begin, double t_end, double dt) {
  std::vector<double> t;
  const auto steps = static_cast<long>(std::ceil((t_end - t_begin) / dt - 1e-9));
  for (long k = 0; k < steps; ++k) t.push_back(t_begin + static_cast<double>(k) * dt);
  t.push_back(t_end);
  return t;
}

ProbeDeviation deviation(std::string name, const std::vector<double>& a,
                         const std::vector<double>& b) {
  ProbeDeviation d{std::move(name), 0, 0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = std::abs(a[i] - b[i]);
    d.max_abs = std::max(d.max_abs, e);
    d.mean_abs += e;
  }
  if (!a.empty()) d.mean_abs /= static_cast<double>(a.size());
  return d;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::pair<double, double> color_range(const HeatProblem& p) {
  return {std::min(p.profile.min_temp(), p.init_temp), std::max(p.profile.max_temp(), p.init_temp)};
}

}  // namespace

fs::path resolve_output_dir(const ExperimentConfig& cfg,
                            const std::optional<std::string>& override_dir) {
  if (override_dir) return *override_dir;
  const char* env = std::getenv(kOutputRootEnv);
  const fs::path root = env && *env ? fs::path(env) : fs::path("heatpinn_out");
  if (cfg.output_dir) {
    const fs::path dir(*cfg.output_dir);
    return dir.is_absolute() || !(env && *env) ? dir : root / dir;
  }
  return root / cfg.name;
}

FieldModel fe_model(const FieldHistory& fe) {
  auto shared = std::make_shared<const FieldHistory>(fe);
  return [shared](const std::vector<PhysicalPoint>& pts) {
    std::vector<double> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(probe(*shared, p.x, p.y, p.t));
    return out;
  };
}

FieldModel pinn_model(const Predictor& predictor) {
  return [predictor](const std::vector<PhysicalPoint>& pts) { return predictor.temperatures(pts); };
}

CompareReport compare_models(const ExperimentConfig& cfg, const FieldModel& reference,
                             const FieldModel& model, double t_begin, double t_end,
                             const std::optional<fs::path>& out_dir) {
  const auto& g = cfg.problem.geometry;
  const auto& p = cfg.problem;
  CompareReport report;

  const auto times = sample_times(t_begin, t_end, cfg.compare.dt_s);
  std::vector<std::vector<double>> ref_traces, model_traces;
  for (const auto& probe_pt : cfg.compare.probes) {
    std::vector<PhysicalPoint> pts;
    for (double t : times) pts.push_back({probe_pt.x, probe_pt.y, t, p.h1, p.h2});
    ref_traces.push_back(reference(pts));
    model_traces.push_back(model(pts));
    report.probes.push_back(deviation(probe_pt.name, ref_traces.back(), model_traces.back()));
  }

  const auto xs = linspace(0, g.lx, cfg.compare.profile_points);
  const double y_mid = g.ly.value_or(0.0) / 2;
  std::vector<std::vector<double>> ref_prof, model_prof;
  for (double t_min : cfg.compare.profile_times_min) {
    std::vector<PhysicalPoint> pts;
    for (double x : xs) pts.push_back({x, y_mid, t_min * 60, p.h1, p.h2});
    ref_prof.push_back(reference(pts));
    model_prof.push_back(model(pts));
    report.profiles.push_back(
        deviation("t" + tag(t_min) + "min", ref_prof.back(), model_prof.back()));
  }

  if (!out_dir) return report;
  ensure_dir(*out_dir);
  std::string csv = "time_s";
  for (const auto& pr : cfg.compare.probes) {
    csv += ",fe_" + pr.name + ",pinn_" + pr.name + ",dev_" + pr.name;
  }
  csv += '\n';
  for (std::size_t i = 0; i < times.size(); ++i) {
    csv += fmt(times[i]);
    for (std::size_t k = 0; k < ref_traces.size(); ++k) {
      csv += ',' + fmt(ref_traces[k][i]) + ',' + fmt(model_traces[k][i]) + ',' +
             fmt(model_traces[k][i] - ref_traces[k][i]);
    }
    csv += '\n';
  }
  write_text(*out_dir / "compare_traces.csv", csv);

  if (!cfg.compare.profile_times_min.empty()) {
    csv = "x_m";
    for (double t_min : cfg.compare.profile_times_min) {
      const std::string s = tag(t_min);
      csv += ",fe_t" + s + "min,pinn_t" + s + "min,dev_t" + s + "min";
    }
    csv += '\n';
    for (std::size_t i = 0; i < xs.size(); ++i) {
      csv += fmt(xs[i]);
      for (std::size_t k = 0; k < ref_prof.size(); ++k) {
        csv += ',' + fmt(ref_prof[k][i]) + ',' + fmt(model_prof[k][i]) + ',' +
               fmt(model_prof[k][i] - ref_prof[k][i]);
      }
      csv += '\n';
    }
    write_text(*out_dir / "compare_profiles.csv", csv);
  }

  csv = "kind,name,max_abs_dev_C,mean_abs_dev_C\n";
  for (const auto& d : report.probes) {
    csv += "trace," + d.name + ',' + fmt(d.max_abs) + ',' + fmt(d.mean_abs) + '\n';
  }
  for (const auto& d : report.profiles) {
    csv += "profile," + d.name + ',' + fmt(d.max_abs) + ',' + fmt(d.mean_abs) + '\n';
  }
  write_text(*out_dir / "compare_summary.csv", csv);

  std::vector<LinePanel> panels;
  for (std::size_t k = 0; k < ref_traces.size(); ++k) {
    std::vector<double> minutes;
    for (double t : times) minutes.push_back(t / 60);
    panels.push_back({cfg.compare.probes[k].name, minutes,
                      {{"FE", ref_traces[k]}, {"PINN", model_traces[k]}}});
  }
  write_text(*out_dir / "compare_traces.svg", line_grid_svg(panels, 2, "time (min)", "T (C)"));
  return report;
}

Predictor predictor_for(const ExperimentConfig& cfg, const Checkpoint& ckpt) {
  if (!(ckpt.state.spec == cfg.network)) {
    throw ConfigError("network: checkpoint was trained with a different network spec");
  }
  Predictor pred(ckpt.state.spec, ckpt.state.params, ckpt.scaling, ckpt.dimensionality);
  pred.require_dimensionality(cfg.problem.dimensionality());
  const Scaling s = cfg.problem.scaling();
  const Scaling& c = ckpt.scaling;
  if (s.length_ref != c.length_ref || s.length_ref_y != c.length_ref_y ||
      s.time_ref != c.time_ref || s.temp_ref != c.temp_ref || s.h_ref != c.h_ref) {
    throw ConfigError("problem: checkpoint scaling differs from the configured problem");
  }
  return pred;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const Predictor& predictor,
                                 const std::optional<fs::path>& out_dir) {
  const auto& p = cfg.problem;
  if (p.dimensionality() != 1 || !predictor.spec().has_input(InputLabel::h1) ||
      !predictor.spec().has_input(InputLabel::h2)) {
    throw ConfigError("sweep: needs a 1D checkpoint trained with h1, h2 inputs");
  }
  if (cfg.sweep.h1.empty() || cfg.sweep.h2.empty()) throw ConfigError("sweep: h1 and h2 grids are empty");
  const double t = cfg.sweep.time_min * 60;
  const auto xs = linspace(0, p.geometry.lx, cfg.sweep.profile_points);
  MeshConfig mesh = cfg.mesh;
  mesh.t_end = t;

  std::vector<SweepCell> cells;
  std::vector<LinePanel> panels;
  if (out_dir) ensure_dir(*out_dir / "sweep");
  for (double h1 : cfg.sweep.h1) {
    for (double h2 : cfg.sweep.h2) {
      SweepCell cell{h1, h2, 0, 0, 0};
      // Both timings average repeated runs so one preempted run does not skew them.
      constexpr int kFeRepeats = 10;
      constexpr int kPinnRepeats = 50;
      std::vector<double> fe_prof;
      auto start = std::chrono::steady_clock::now();
      for (int r = 0; r < kFeRepeats; ++r) {
        const FieldHistory fe =
            solve_1d(p.material, p.geometry.lx, h1, h2, p.profile, p.init_temp, mesh);
        fe_prof.clear();
        for (double x : xs) fe_prof.push_back(probe(fe, x, t));
      }
      cell.fe_seconds = seconds_since(start) / kFeRepeats;

      std::vector<PhysicalPoint> pts;
      for (double x : xs) pts.push_back({x, 0, t, h1, h2});
      std::vector<double> pinn_prof;
      start = std::chrono::steady_clock::now();
      for (int r = 0; r < kPinnRepeats; ++r) pinn_prof = predictor.temperatures(pts);
      cell.pinn_seconds = seconds_since(start) / kPinnRepeats;
      cell.max_abs = deviation("", fe_prof, pinn_prof).max_abs;
      cells.push_back(cell);

      if (out_dir) {
        std::string csv = "x_m,fe_C,pinn_C,dev_C\n";
        for (std::size_t i = 0; i < xs.size(); ++i) {
          csv += fmt(xs[i]) + ',' + fmt(fe_prof[i]) + ',' + fmt(pinn_prof[i]) + ',' +
                 fmt(pinn_prof[i] - fe_prof[i]) + '\n';
        }
        write_text(*out_dir / "sweep" / ("cell_h1_" + tag(h1) + "_h2_" + tag(h2) + ".csv"), csv);
        std::vector<double> mm;
        for (double x : xs) mm.push_back(x * 1000);
        panels.push_back({"h1=" + tag(h1) + " h2=" + tag(h2), mm,
                          {{"FE", fe_prof}, {"PINN", pinn_prof}}});
      }
    }
  }
  if (out_dir) {
    std::string summary = "h1,h2,max_abs_dev_C\n";
    std::string timing = "h1,h2,fe_seconds,pinn_seconds,speedup\n";
    for (const auto& c : cells) {
      summary += tag(c.h1) + ',' + tag(c.h2) + ',' + fmt(c.max_abs) + '\n';
      timing += tag(c.h1) + ',' + tag(c.h2) + ',' + fmt(c.fe_seconds) + ',' + fmt(c.pinn_seconds) +
                ',' + fmt(c.fe_seconds / c.pinn_seconds) + '\n';
    }
    write_text(*out_dir / "sweep_summary.csv", summary);
    write_text(*out_dir / "sweep_timing.csv", timing);
    write_text(*out_dir / "sweep.svg",
               line_grid_svg(panels, static_cast<int>(cfg.sweep.h2.size()), "x (mm)", "T (C)"));
  }
  return cells;
}

std::vector<HeatmapSlice> run_heatmap(const ExperimentConfig& cfg, const Predictor& predictor,
                                      const std::optional<fs::path>& out_dir) {
  const auto& p = cfg.problem;
  if (p.dimensionality() != 2) throw ConfigError("heatmap: needs a 2D problem (geometry.ly)");
  const double lx = p.geometry.lx, ly = *p.geometry.ly;
  const auto xs = linspace(0, lx, cfg.heatmap.nx);
  const auto ys = linspace(0, ly, cfg.heatmap.ny);
  MeshConfig mesh = cfg.mesh;
  double last = 0;
  for (double t : cfg.heatmap.times_min) last = std::max(last, t * 60);
  mesh.t_end = std::max(mesh.dt, std::min(last, p.profile.total_duration() * 60));
  const FieldHistory fe = solve_fe(p, mesh);
  const auto [lo, hi] = color_range(p);
  if (out_dir) ensure_dir(*out_dir);

  std::vector<HeatmapSlice> slices;
  std::string summary = "time_min,mean_abs_dev_C,max_abs_dev_C\n";
  for (double t_min : cfg.heatmap.times_min) {
    std::vector<PhysicalPoint> pts;
    for (double y : ys) {
      for (double x : xs) pts.push_back({x, y, t_min * 60, 0, 0});
    }
    const std::vector<double> pinn = predictor.temperatures(pts);
    std::vector<double> ref;
    for (const auto& q : pts) ref.push_back(probe(fe, q.x, q.y, q.t));
    const auto d = deviation("", ref, pinn);
    slices.push_back({t_min, d.mean_abs, d.max_abs});
    summary += tag(t_min) + ',' + fmt(d.mean_abs) + ',' + fmt(d.max_abs) + '\n';
    if (!out_dir) continue;

    const std::string stem = "heatmap_t" + tag(t_min) + "min";
    auto emit = [&](const std::string& label, const std::string& title,
                    const std::vector<double>& values) {
      FieldHistory field;
      field.axes = {xs, ys};
      field.times = {t_min * 60};
      field.temps = {values};
      write_field_csv((*out_dir / (stem + "_" + label + ".csv")).string(), field);
      write_text(*out_dir / (stem + "_" + label + ".svg"),
                 heatmap_svg(values, cfg.heatmap.nx, cfg.heatmap.ny, lo, hi,
                             title + " temperature at t = " + tag(t_min) + " min", lx / ly));
    };
    emit("pinn", "PINN", pinn);
    emit("fe", "FE", ref);
  }
  if (out_dir) write_text(*out_dir / "heatmap_summary.csv", summary);
  return slices;
}

void cmd_fe_run(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  ensure_dir(out_dir);
  const auto start = std::chrono::steady_clock::now();
  const FieldHistory fe = solve_fe(cfg.problem, cfg.mesh);
  const double elapsed = seconds_since(start);
  write_field_csv((out_dir / "fe_field.csv").string(), fe);
  log << "fe-run: " << fe.times.size() << " slices x " << fe.node_count() << " nodes in "
      << fmt(elapsed) << " s -> " << (out_dir / "fe_field.csv").string() << '\n';
  for (const auto& pr : cfg.compare.probes) {
    log << "  " << pr.name << " at t_end: " << fmt(probe(fe, pr.x, pr.y, fe.times.back()))
        << " C\n";
  }
}

TrainState cmd_train(const ExperimentConfig& cfg, const fs::path& out_dir,
                     const std::optional<std::string>& resume, std::ostream& log) {
  ensure_dir(out_dir);
  const fs::path ckpt_path = out_dir / "checkpoint.bin";
  const fs::path log_path = out_dir / "train_log.csv";
  const Scaling scaling = cfg.problem.scaling();
  const int dims = cfg.problem.dimensionality();

  TrainState state;
  if (resume) {
    Checkpoint ck = load_checkpoint(*resume);
    (void)predictor_for(cfg, ck);
    state = std::move(ck.state);
    log << "train: resuming " << *resume << " at epoch " << state.epochs_completed << '\n';
  } else {
    state = initial_state(cfg.problem, cfg.network, cfg.training);
  }

  const std::int64_t total = state.epochs_completed + cfg.training.epochs;
  const std::int64_t every = std::max<std::int64_t>(1, cfg.training.epochs / 10);
  TrainHooks hooks;
  hooks.on_checkpoint = [&](const TrainState& s) {
    save_checkpoint(ckpt_path.string(), {s, scaling, dims});
  };
  hooks.on_epoch = [&](const HistoryRow& row) {
    if ((row.epoch + 1) % every != 0 && row.epoch + 1 != total) return;
    log << "epoch " << row.epoch + 1 << "/" << total << " composite " << fmt(row.composite);
    for (std::size_t k = 0; k < row.losses.size(); ++k) {
      log << ' ' << state.term_names[k] << '=' << fmt(row.losses[k]);
    }
    log << '\n';
  };
  auto write_log = [&] {
    std::ofstream os(log_path, std::ios::binary);
    if (!os) throw std::ios_base::failure("cannot open " + log_path.string() + " for writing");
    write_history_csv(os, state.term_names, state.history);
    if (!os) throw std::ios_base::failure("write failed: " + log_path.string());
  };
  try {
    train(cfg.problem, cfg.training, state, hooks);
  } catch (const NumericError& e) {
    write_log();
    log << "train: aborted: " << e.what() << '\n';
    if (fs::exists(ckpt_path)) log << "train: last good checkpoint kept at " << ckpt_path.string() << '\n';
    throw;
  }
  write_log();
  log << "train: " << state.epochs_completed << " epochs, clamp hits " << state.clamp_hits
      << " -> " << ckpt_path.string() << '\n';
  return state;
}

CompareReport cmd_compare(const ExperimentConfig& cfg, const Checkpoint& ckpt,
                          const fs::path& out_dir, bool extrapolate, std::ostream& log) {
  Predictor pred = predictor_for(cfg, ckpt);
  pred.allow_extrapolation(extrapolate);
  const FieldHistory fe = solve_fe(cfg.problem, cfg.mesh);
  const double t_end = (extrapolate ? cfg.problem.profile.total_duration()
                                    : cfg.problem.window_min()) * 60;
  const auto report = compare_models(cfg, fe_model(fe), pinn_model(pred), 0, t_end, out_dir);
  for (const auto& d : report.probes) {
    log << "compare: " << d.name << " max |PINN - FE| " << fmt(d.max_abs) << " C, mean "
        << fmt(d.mean_abs) << " C over 0-" << fmt(t_end / 60) << " min\n";
  }
  for (const auto& d : report.profiles) {
    log << "compare: profile " << d.name << " max " << fmt(d.max_abs) << " C\n";
  }
  return report;
}

std::vector<SweepCell> cmd_sweep(const ExperimentConfig& cfg, const Checkpoint& ckpt,
                                 const fs::path& out_dir, std::ostream& log) {
  const auto cells = run_sweep(cfg, predictor_for(cfg, ckpt), out_dir);
  for (const auto& c : cells) {
    log << "sweep: h1=" << tag(c.h1) << " h2=" << tag(c.h2) << " max dev " << fmt(c.max_abs)
        << " C, FE " << fmt(c.fe_seconds * 1e3) << " ms, PINN " << fmt(c.pinn_seconds * 1e3)
        << " ms\n";
  }
  return cells;
}

std::vector<HeatmapSlice> cmd_heatmap(const ExperimentConfig& cfg, const Checkpoint& ckpt,
                                      const fs::path& out_dir, bool extrapolate,
                                      std::ostream& log) {
  Predictor pred = predictor_for(cfg, ckpt);
  pred.allow_extrapolation(extrapolate);
  const auto slices = run_heatmap(cfg, pred, out_dir);
  for (const auto& s : slices) {
    log << "heatmap: t=" << tag(s.time_min) << " min mean |PINN - FE| " << fmt(s.mean_abs)
        << " C, max " << fmt(s.max_abs) << " C\n";
  }
  return slices;
}

}  // namespace heatpinn::cli

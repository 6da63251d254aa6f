#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "heatpinn/autodiff.hpp"
#include "heatpinn/checkpoint.hpp"
#include "heatpinn/cli/commands.hpp"
#include "heatpinn/cli/config.hpp"
#include "heatpinn/fe_oracle.hpp"
#include "heatpinn/loss.hpp"
#include "heatpinn/network.hpp"
#include "heatpinn/sampler.hpp"
#include "heatpinn/trainer.hpp"

using namespace heatpinn;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Context {
  fs::path presets;
  fs::path out;
  std::ofstream log;
};

cli::ExperimentConfig preset(const Context& ctx, const std::string& name) {
  return cli::load_config((ctx.presets / (name + ".json")).string());
}

// Trains `cfg` from scratch into out/<name>; the training log goes to the log file.
Checkpoint train_preset(Context& ctx, const cli::ExperimentConfig& cfg) {
  const auto dir = ctx.out / cfg.name;
  fs::create_directories(dir);
  ctx.log << "== train " << cfg.name << '\n';
  auto state = cli::cmd_train(cfg, dir, std::nullopt, ctx.log);
  ctx.log.flush();
  return Checkpoint{std::move(state), cfg.problem.scaling(), cfg.problem.dimensionality()};
}

// 1. FE against the single-mode analytic solution of the insulated bar.
Outcome oracle_equivalence(Context&) {
  const MaterialProps m{};
  const double L = 0.01;
  const double amplitude = 10;
  const SeriesSolution sol{0, amplitude, {{1, 1}}};
  const double tau = L * L / (thermal_diffusivity(m) * kPi * kPi);
  const auto start = std::chrono::steady_clock::now();
  auto run = [&](int elements, double dt) {
    std::vector<double> init;
    for (int i = 0; i <= elements; ++i) {
      init.push_back(analytic_solution(sol, m, L, L * i / elements, 0));
    }
    const double t_end = std::ceil(tau / 5) * 5;
    const auto fe = solve_1d_from(m, L, 0, 0, AirProfile::constant(0, t_end / 60), init,
                                  MeshConfig{elements, dt, t_end});
    double err = 0;
    for (std::size_t k = 0; k < fe.times.size() && fe.times[k] <= tau + 1e-9; ++k) {
      for (std::size_t i = 0; i < fe.axes[0].size(); ++i) {
        err = std::max(err, std::abs(fe.temps[k][i] -
                                     analytic_solution(sol, m, L, fe.axes[0][i], fe.times[k])));
      }
    }
    return err;
  };
  const double coarse = run(10, 5);
  const double fine = run(20, 2.5);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double rel = coarse / amplitude;
  return {rel < 0.01 && coarse / fine >= 2.0 && secs < 1.0,
          fmt("max error %.3g%% of amplitude, refinement ratio %.2f, %.3f s", 100 * rel,
              coarse / fine, secs)};
}

// 2. Autodiff against central finite differences and the feature identities.
Outcome autodiff_fidelity(Context&) {
  NetworkSpec spec;
  spec.hidden_layers = 3;
  spec.nodes_per_layer = 16;
  spec.engineered_feature_count = 16;
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> u(0, 1);
  const double h = 1e-4;
  double worst1 = 0, worst2 = 0;
  int kinks = 0;
  for (int draw = 0; draw < 100; ++draw) {
    ParamStore p = init_glorot(spec, 1000 + static_cast<std::uint64_t>(draw));
    std::uniform_real_distribution<double> bias(-0.5, 0.5);
    for (const auto& slot : p.layout()) {
      if (slot.name.ends_with(".bias")) {
        for (double& b : p[slot.name]) b = bias(rng);
      }
    }
    std::vector<InputPoint> pts;
    for (int i = 0; i < 100; ++i) pts.push_back({u(rng), 0, u(rng)});
    const auto res = evaluate_batch(spec, p, pts, DerivativeRequest::all_1d());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto at = [&](double dx, double dt) {
        InputPoint q = pts[i];
        q.x += dx;
        q.t += dt;
        return evaluate(spec, p, q, DerivativeRequest{true, false, false, false, false});
      };
      const auto xp = at(h, 0), xm = at(-h, 0), tp = at(0, h), tm = at(0, -h);
      const double fx = (xp.value - xm.value) / (2 * h);
      const double ft = (tp.value - tm.value) / (2 * h);
      const double fxx = (*xp.d_dx - *xm.d_dx) / (2 * h);
      auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1.0); };
      worst1 = std::max({worst1, rel(*res[i].d_dx, fx), rel(*res[i].d_dt, ft)});
      double err2 = rel(*res[i].d2_dx2, fxx);
      if (err2 > 1e-3) {
        // ELU's second derivative jumps where a pre-activation crosses zero. If
        // the one-sided stencils disagree the central one straddles such a kink;
        // compare against the stencil on the evaluation point's own side. Away
        // from kinks the two agree to their O(h^2) truncation error.
        const double g0 = *res[i].d_dx;
        const double right = (-3 * g0 + 4 * *xp.d_dx - *at(2 * h, 0).d_dx) / (2 * h);
        const double left = (3 * g0 - 4 * *xm.d_dx + *at(-2 * h, 0).d_dx) / (2 * h);
        if (rel(left, right) > 1e-6) {
          ++kinks;
          err2 = std::min(rel(*res[i].d2_dx2, left), rel(*res[i].d2_dx2, right));
        }
      }
      worst2 = std::max(worst2, err2);
    }
  }

  // Single-feature network whose output is the feature itself: with a large
  // positive dense bias the ELU stays on its identity branch.
  NetworkSpec one;
  one.hidden_layers = 1;
  one.nodes_per_layer = 1;
  one.engineered_feature_count = 1;
  double worst_id = 0;
  for (int draw = 0; draw < 100; ++draw) {
    ParamStore p(one);
    const double a = -3 + 6 * u(rng), a0 = -1 + 2 * u(rng);
    const double b = 0.5 + 5 * u(rng), b0 = -kPi + 2 * kPi * u(rng);
    p["pre_t.weight"][0] = a;
    p["pre_t.bias"][0] = a0;
    p["pre_x.weight"][0] = b;
    p["pre_x.bias"][0] = b0;
    p["dense0.weight"][0] = 1;
    p["dense0.bias"][0] = 100;
    p["output.weight"][0] = 1;
    for (int i = 0; i < 100; ++i) {
      const InputPoint q{u(rng), 0, u(rng)};
      const double phi = engineered_layer(one, p, q)[0];
      if (std::abs(phi) < 1e-6) continue;
      const auto r = evaluate(one, p, q, DerivativeRequest::all_1d());
      worst_id = std::max({worst_id, std::abs(*r.d_dt - a * phi) / std::abs(a * phi),
                           std::abs(*r.d2_dx2 + b * b * phi) / std::abs(b * b * phi)});
    }
  }
  return {worst1 <= 1e-4 && worst2 <= 1e-3 && worst_id <= 1e-10,
          fmt("worst first-derivative error %.2e, second %.2e (%d of 10000 stencils straddle an "
              "ELU kink), feature identity %.2e",
              worst1, worst2, kinks, worst_id)};
}

// 3 and 5 share the desk-scale run of the 10 mm problem.
struct Slab10mm {
  cli::ExperimentConfig cfg;
  Checkpoint ckpt;
};

Slab10mm& slab10mm(Context& ctx) {
  static std::optional<Slab10mm> run;
  if (!run) {
    auto cfg = preset(ctx, "slab10mm");
    auto ckpt = train_preset(ctx, cfg);
    run = Slab10mm{std::move(cfg), std::move(ckpt)};
  }
  return *run;
}

Outcome reproduction_1d(Context& ctx) {
  auto& run = slab10mm(ctx);
  const auto fe = solve_fe(run.cfg.problem, run.cfg.mesh);
  const auto pred = cli::predictor_for(run.cfg, run.ckpt);
  const auto report = cli::compare_models(run.cfg, cli::fe_model(fe), cli::pinn_model(pred), 0,
                                          run.cfg.mesh.t_end, ctx.out / run.cfg.name);
  double mid = -1;
  for (const auto& p : report.probes) {
    if (p.name == "midpoint") mid = p.max_abs;
  }
  return {run.ckpt.state.epochs_completed >= 20000 && mid >= 0 && mid < 2.0,
          fmt("%lld epochs, max midpoint deviation %.3f C (limit 2.0)",
              static_cast<long long>(run.ckpt.state.epochs_completed), mid)};
}

std::int64_t first_epoch_below(const TrainState& s, double level) {
  for (const auto& row : s.history) {
    if (row.composite <= level) return row.epoch;
  }
  return -1;
}

// 4. Extrapolation past the trained window; plain network vs engineered.
Outcome extrapolation_ordering(Context& ctx) {
  const auto nn_cfg = preset(ctx, "extrap_nn");
  const auto pinn_cfg = preset(ctx, "extrap_pinn");
  const auto nn = train_preset(ctx, nn_cfg);
  const auto pinn = train_preset(ctx, pinn_cfg);
  const auto fe = solve_fe(pinn_cfg.problem, pinn_cfg.mesh);
  const double t0 = pinn_cfg.problem.window_min() * 60;
  const double t1 = pinn_cfg.mesh.t_end;
  auto pred_nn = cli::predictor_for(nn_cfg, nn);
  auto pred_pinn = cli::predictor_for(pinn_cfg, pinn);
  pred_nn.allow_extrapolation(true);
  pred_pinn.allow_extrapolation(true);
  const auto r_nn = cli::compare_models(nn_cfg, cli::fe_model(fe), cli::pinn_model(pred_nn), t0,
                                        t1, std::nullopt);
  const auto r_pinn = cli::compare_models(pinn_cfg, cli::fe_model(fe),
                                          cli::pinn_model(pred_pinn), t0, t1, std::nullopt);
  bool ordered = r_nn.probes.size() == 2 && r_pinn.probes.size() == 2;
  std::string detail;
  for (std::size_t i = 0; ordered && i < r_pinn.probes.size(); ++i) {
    ordered = ordered && r_pinn.probes[i].max_abs < r_nn.probes[i].max_abs;
    detail += fmt("%s PINN %.2f vs NN %.2f C; ", r_pinn.probes[i].name.c_str(),
                  r_pinn.probes[i].max_abs, r_nn.probes[i].max_abs);
  }
  const double level = 1e-2;
  const auto e_nn = first_epoch_below(nn.state, level);
  const auto e_pinn = first_epoch_below(pinn.state, level);
  const bool faster = e_nn >= 0 && (e_pinn < 0 || e_nn < e_pinn);
  detail += fmt("composite <= %.0e at epoch %lld (NN) vs %lld (PINN)", level,
                static_cast<long long>(e_nn), static_cast<long long>(e_pinn));
  return {ordered && faster, detail};
}

// 5. Normalization factors on the desk-scale 10 mm run plus the worked example.
Outcome normalization(Context& ctx) {
  const auto lam = update_normalization({1.0, 0.5, 0.005, 1e-4}, 0.01);
  const bool example = lam == std::vector<double>{1, 1, 0.5, 0.01};
  const auto& hist = slab10mm(ctx).ckpt.state.history;
  const std::size_t from = hist.size() - hist.size() / 10;
  std::size_t not_unity = 0;
  double smallest = 1;
  for (std::size_t i = from; i < hist.size(); ++i) {
    for (double l : hist[i].lambdas) {
      if (l != 1.0) ++not_unity;
      smallest = std::min(smallest, l);
    }
  }
  return {example && not_unity == 0 && !hist.empty(),
          fmt("worked example %s; final 10%% of epochs: %zu factors below 1 (smallest %.3g)",
              example ? "exact" : "WRONG", not_unity, smallest)};
}

// 6. h-as-inputs network over a grid of boundary conditions.
Outcome h_sweep(Context& ctx) {
  const auto cfg = preset(ctx, "h_sweep");
  const auto ckpt = train_preset(ctx, cfg);
  const auto pred = cli::predictor_for(cfg, ckpt);
  const auto cells = cli::run_sweep(cfg, pred, ctx.out / cfg.name);
  std::set<std::pair<double, double>> seen;
  double worst = 0, fe_s = 0, pinn_s = 0;
  for (const auto& c : cells) {
    seen.insert({c.h1, c.h2});
    worst = std::max(worst, c.max_abs);
    fe_s += c.fe_seconds;
    pinn_s += c.pinn_seconds;
  }
  const bool grid = cells.size() == 9 && seen.contains({50, 50}) && seen.contains({100, 50}) &&
                    seen.contains({100, 100});
  const double speedup = fe_s / pinn_s;
  return {grid && worst < 3.0 && speedup >= 100,
          fmt("%zu cells, worst max deviation %.3f C (limit 3.0); per-cell FE %.1f us, PINN "
              "%.1f us, speedup %.1fx (required 100x)",
              cells.size(), worst, 1e6 * fe_s / cells.size(), 1e6 * pinn_s / cells.size(),
              speedup)};
}

// 7. Two-dimensional plate.
Outcome reproduction_2d(Context& ctx) {
  const auto cfg = preset(ctx, "plate2d");
  const auto ckpt = train_preset(ctx, cfg);
  const auto pred = cli::predictor_for(cfg, ckpt);
  const auto slices = cli::run_heatmap(cfg, pred, ctx.out / cfg.name);
  bool ok = ckpt.state.epochs_completed >= 30000 && slices.size() == 3;
  std::string detail = fmt("%lld epochs; mean |PINN - FE|:",
                           static_cast<long long>(ckpt.state.epochs_completed));
  for (const auto& s : slices) {
    ok = ok && s.mean_abs < 2.0;
    detail += fmt(" t=%gmin %.3f C", s.time_min, s.mean_abs);
  }
  return {ok, detail + " (limit 2.0)"};
}

double ks_uniform(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    d = std::max({d, std::abs((i + 1) / n - v[i]), std::abs(v[i] - i / n)});
  }
  return d;
}

// 8. Property suites that need no training.
Outcome properties(Context&) {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* name) {
    if (!ok) failed.push_back(name);
  };

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  double violation = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const MaterialProps m{0.1 + u(rng), 500 + 2000 * u(rng), 500 + 1000 * u(rng)};
    const double init = -20 + 60 * u(rng);
    const AirProfile air(init + 10 * (u(rng) - 0.5),
                         {RampSegment{2 + 10 * u(rng), 100 * u(rng) + 1}, HoldSegment{5}}, 60);
    const double lo = std::min(init, air.min_temp());
    const double hi = std::max(init, air.max_temp());
    const MeshConfig mesh{10, 5, 1800,
                          u(rng) < 0.5 ? TimeScheme::exponential : TimeScheme::backward_euler};
    FieldHistory fe;
    if (trial % 10 == 0) {
      std::array<EdgeBc, 4> edges{};
      for (auto& e : edges) e.h = u(rng) < 0.3 ? 0 : 300 * u(rng);
      fe = solve_2d(m, 0.01 + 0.05 * u(rng), 0.005 + 0.03 * u(rng), edges, air, init,
                    MeshConfig{6, 10, 1800, mesh.scheme});
    } else {
      const double h1 = u(rng) < 0.2 ? 0 : 500 * u(rng);
      const double h2 = u(rng) < 0.2 ? 0 : 500 * u(rng);
      fe = solve_1d(m, 0.002 + 0.05 * u(rng), h1, h2, air, init, mesh);
    }
    violation = std::max(violation, max_principle_violation(fe, lo, hi) / (1 + std::abs(hi)));
  }
  check(violation <= 1e-9, "FE maximum principle");

  const auto below = activation(Activation::elu, -1e-12);
  const auto above = activation(Activation::elu, 1e-12);
  check(std::abs(below.value - above.value) < 1e-11 && std::abs(below.d1 - above.d1) < 1e-11,
        "ELU C1 continuity");
  check(activation(Activation::elu, -0.5).d2 != 0, "ELU second derivative");

  NetworkSpec relu;
  relu.architecture = Architecture::plain;
  relu.activation = Activation::relu;
  const auto relu_params = init_glorot(relu, 3);
  std::vector<InputPoint> pts;
  for (int i = 0; i < 500; ++i) pts.push_back({u(rng), 0, u(rng)});
  bool zero = true;
  for (const auto& r : evaluate_batch(relu, relu_params, pts, DerivativeRequest::all_1d())) {
    zero = zero && *r.d2_dx2 == 0.0;
  }
  check(zero, "ReLU zero second derivative");

  SamplingDomain domain;
  domain.kink_times = {0.0, 2.0 / 3.0};
  SamplerConfig sc;
  sc.batch_per_term = 10000;
  sc.densify_fraction = 0;
  const auto flat = sample_batch(sc, domain, 1);
  std::vector<double> ts, xs;
  for (const auto& p : flat.interior) {
    ts.push_back(p.t);
    xs.push_back(p.x);
  }
  check(ks_uniform(ts) < 0.05 && ks_uniform(xs) < 0.05, "sampler uniformity");
  sc.densify_fraction = 0.3;
  const auto dense = sample_batch(sc, domain, 2);
  std::size_t near = 0;
  for (const auto& p : dense.interior) {
    for (double k : domain.kink_times) {
      if (std::abs(p.t - k) <= sc.kink_window) {
        ++near;
        break;
      }
    }
  }
  check(near >= dense.interior.size() / 4, "sampler densification");
  bool edges_exact = true;
  for (const auto& p : dense.boundaries[0]) edges_exact = edges_exact && p.x == 0.0;
  for (const auto& p : dense.boundaries[1]) edges_exact = edges_exact && p.x == 1.0;
  for (const auto& p : dense.initial) edges_exact = edges_exact && p.t == 0.0;
  check(edges_exact, "sampler boundary coordinates");

  HeatProblem problem;
  problem.geometry.lx = 0.01;
  NetworkSpec small;
  small.hidden_layers = 2;
  small.nodes_per_layer = 8;
  small.engineered_feature_count = 8;
  TrainConfig tc;
  tc.epochs = 200;
  tc.learning_rate = 1e-3;
  tc.normalization_update_interval = 10;
  tc.sampler.batch_per_term = 32;
  tc.seed = 11;
  const auto a = train(problem, small, tc);
  const auto b = train(problem, small, tc);
  check(a.params == b.params && a.history == b.history && a.lambdas == b.lambdas,
        "training determinism");

  const Checkpoint ck{a, problem.scaling(), 1};
  const auto back = deserialize_checkpoint(serialize_checkpoint(ck));
  const Predictor p1(ck.state.spec, ck.state.params, ck.scaling, 1);
  const Predictor p2(back.state.spec, back.state.params, back.scaling, 1);
  bool same = back.state.params == a.params && back.state.history == a.history &&
              back.state.adam.first_moment == a.adam.first_moment &&
              back.state.adam.second_moment == a.adam.second_moment &&
              back.state.adam.step_count == a.adam.step_count;
  for (int i = 0; i < 100; ++i) {
    PhysicalPoint q;
    q.x = 0.01 * u(rng);
    q.t = 900 * u(rng);
    same = same && p1.temperature(q) == p2.temperature(q);
  }
  check(same, "checkpoint round trip");

  std::string detail = failed.empty() ? "all property suites hold" : "failed:";
  for (const auto& f : failed) detail += " " + f + ";";
  return {failed.empty(), fmt("%s (FE max principle worst %.1e over 1000 configs)",
                              detail.c_str(), violation)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heatpinn acceptance criteria"};
  std::vector<int> only;
  std::vector<int> allowed;
  std::string out = "acceptance_out";
  std::string presets = HEATPINN_PRESET_DIR;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--allow-fail", allowed,
                 "Criteria whose failure does not change the exit status");
  app.add_option("--out", out, "Directory for run artifacts");
  app.add_option("--presets", presets, "Directory holding the preset configs");
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  ctx.presets = presets;
  ctx.out = out;
  fs::create_directories(ctx.out);
  ctx.log.open(ctx.out / "acceptance.log");
  std::ofstream summary(ctx.out / "summary.txt");

  const std::vector<std::pair<const char*, std::function<Outcome(Context&)>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"autodiff fidelity", autodiff_fidelity},
      {"1D reproduction", reproduction_1d},
      {"extrapolation ordering", extrapolation_ordering},
      {"adaptive normalization", normalization},
      {"h-as-inputs sweep", h_sweep},
      {"2D reproduction", reproduction_2d},
      {"property suites", properties},
  };
  int blocking = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string line = fmt("criterion %d %s: %s  %s [%.1f s]", id, criteria[i].first,
                                 o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    summary << line << std::endl;
    const bool tolerated = std::find(allowed.begin(), allowed.end(), id) != allowed.end();
    if (!o.pass && !tolerated) ++blocking;
  }
  return blocking == 0 ? 0 : 1;
}

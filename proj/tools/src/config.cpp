#include "heatpinn/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "heatpinn/errors.hpp"
#include "json.hpp"

namespace heatpinn::cli {

namespace {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so that
// misspelt keys are reported instead of silently ignored.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }
  Reader(const Reader&) = delete;
  ~Reader() = default;

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!j_.contains(key)) fail(at(key), "missing required key");
    return convert<T>(key);
  }

  Reader child(const std::string& key) {
    if (!j_.contains(key)) fail(at(key), "missing required section");
    used_.insert(key);
    return Reader(j_.at(key), at(key));
  }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) fail(at(key), "missing required key");
    used_.insert(key);
    return j_.at(key);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.contains(k)) fail(at(k), "unknown key");
    }
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

 private:
  template <typename T>
  T convert(const std::string& key) {
    used_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) fail(at(key), "expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) fail(at(key), "expected an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(at(key), "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(at(key), "expected a string");
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array()) fail(at(key), "expected an array of numbers");
        for (const auto& e : v) {
          if (!e.is_number()) fail(at(key), "expected an array of numbers");
        }
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(at(key), e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

MaterialProps read_material(Reader r) {
  MaterialProps m;
  m.k = r.get("k", m.k);
  m.rho = r.get("rho", m.rho);
  m.cp = r.get("cp", m.cp);
  r.finish();
  return m;
}

Geometry read_geometry(Reader r) {
  Geometry g;
  g.lx = r.require<double>("lx");
  if (r.has("ly")) g.ly = r.get("ly", 0.0);
  r.finish();
  return g;
}

AirProfile read_profile(Reader r) {
  const double start = r.get("start_temp", 0.0);
  const double total = r.require<double>("total_duration");
  std::vector<ProfileSegment> segments;
  const json& list = r.raw("segments");
  if (!list.is_array()) Reader::fail(r.at("segments"), "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    Reader seg(list[i], r.at("segments") + "[" + std::to_string(i) + "]");
    if (seg.has("ramp")) {
      Reader ramp = seg.child("ramp");
      segments.push_back(RampSegment{ramp.require<double>("rate"), ramp.require<double>("target")});
      ramp.finish();
    } else if (seg.has("hold")) {
      Reader hold = seg.child("hold");
      segments.push_back(HoldSegment{hold.require<double>("duration")});
      hold.finish();
    } else {
      Reader::fail(seg.at("ramp"), "segment must be {\"ramp\": ...} or {\"hold\": ...}");
    }
    seg.finish();
  }
  r.finish();
  return AirProfile(start, std::move(segments), total);
}

void read_boundary(Reader r, ExperimentConfig& cfg) {
  auto& p = cfg.problem;
  const auto mode = r.get<std::string>("mode", "fixed");
  if (mode == "fixed") {
    p.bc_mode = BcMode::fixed;
  } else if (mode == "h_inputs") {
    p.bc_mode = BcMode::h_inputs;
  } else {
    Reader::fail(r.at("mode"), "expected \"fixed\" or \"h_inputs\", got \"" + mode + "\"");
  }
  p.h_ref = r.get("h_ref", p.h_ref);
  if (p.geometry.dimensionality() == 1) {
    p.h1 = r.get("h1", p.h1);
    p.h2 = r.get("h2", p.h2);
  } else {
    Reader edges = r.child("edges");
    const char* names[] = {"x_min", "x_max", "y_min", "y_max"};
    for (int e = 0; e < 4; ++e) p.edges[static_cast<std::size_t>(e)].h = edges.get(names[e], 0.0);
    edges.finish();
  }
  if (r.has("h_range")) {
    const auto range = r.get<std::vector<double>>("h_range", {});
    if (range.size() != 2) Reader::fail(r.at("h_range"), "expected [min, max]");
    cfg.training.sampler.h_min = range[0];
    cfg.training.sampler.h_max = range[1];
  }
  r.finish();
}

void read_network(Reader r, ExperimentConfig& cfg) {
  auto& n = cfg.network;
  try {
    n.architecture = parse_architecture(r.get<std::string>("architecture", "engineered"));
    n.activation = parse_activation(r.get<std::string>("activation", "elu"));
  } catch (const ContractError& e) {
    Reader::fail(r.at("architecture"), e.what());
  }
  n.hidden_layers = r.get("hidden_layers", n.hidden_layers);
  n.nodes_per_layer = r.get("nodes_per_layer", n.nodes_per_layer);
  n.engineered_feature_count = r.get("engineered_features", n.engineered_feature_count);
  n.input_labels = cfg.problem.default_inputs();
  r.finish();
}

void read_training(Reader r, ExperimentConfig& cfg) {
  auto& t = cfg.training;
  t.epochs = r.get<std::int64_t>("epochs", t.epochs);
  t.learning_rate = r.get("learning_rate", t.learning_rate);
  t.normalization_update_interval =
      r.get<std::int64_t>("normalization_update_interval", t.normalization_update_interval);
  t.normalization_threshold = r.get("normalization_threshold", t.normalization_threshold);
  t.checkpoint_interval = r.get<std::int64_t>("checkpoint_interval", t.checkpoint_interval);
  t.seed = r.get<std::uint64_t>("seed", t.seed);
  if (r.has("sampler")) {
    Reader s = r.child("sampler");
    t.sampler.batch_per_term = s.get("batch_per_term", t.sampler.batch_per_term);
    t.sampler.densify_fraction = s.get("densify_fraction", t.sampler.densify_fraction);
    t.sampler.kink_window = s.get("kink_window", t.sampler.kink_window);
    s.finish();
  }
  r.finish();
}

void read_mesh(Reader r, MeshConfig& m) {
  m.elements_per_direction = r.get("elements_per_direction", m.elements_per_direction);
  m.dt = r.get("dt", m.dt);
  const auto scheme = r.get<std::string>("scheme", "exponential");
  if (scheme == "exponential") {
    m.scheme = TimeScheme::exponential;
  } else if (scheme == "backward_euler") {
    m.scheme = TimeScheme::backward_euler;
  } else {
    Reader::fail(r.at("scheme"), "expected \"exponential\" or \"backward_euler\"");
  }
  r.finish();
}

std::vector<Probe> read_probes(Reader& r, const std::string& key) {
  std::vector<Probe> out;
  const json& list = r.raw(key);
  if (!list.is_array()) Reader::fail(r.at(key), "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    Reader p(list[i], r.at(key) + "[" + std::to_string(i) + "]");
    out.push_back({p.require<std::string>("name"), p.require<double>("x"), p.get("y", 0.0)});
    p.finish();
  }
  return out;
}

void read_compare(Reader r, CompareSettings& c) {
  if (r.has("probes")) c.probes = read_probes(r, "probes");
  c.profile_times_min = r.get("profile_times_min", c.profile_times_min);
  c.profile_points = r.get("profile_points", c.profile_points);
  c.dt_s = r.get("dt_s", c.dt_s);
  r.finish();
}

void read_sweep(Reader r, SweepSettings& s) {
  s.h1 = r.get("h1", s.h1);
  s.h2 = r.get("h2", s.h2);
  s.time_min = r.get("time_min", s.time_min);
  s.profile_points = r.get("profile_points", s.profile_points);
  r.finish();
}

void read_heatmap(Reader r, HeatmapSettings& h) {
  h.times_min = r.get("times_min", h.times_min);
  h.nx = r.get("nx", h.nx);
  h.ny = r.get("ny", h.ny);
  r.finish();
}

// Checks that need several sections at once; core validation errors are
// re-raised with the section they came from.
void validate(ExperimentConfig& cfg) {
  auto section = [](const char* where, auto&& fn) {
    try {
      fn();
    } catch (const ContractError& e) {
      throw ConfigError(std::string(where) + ": " + e.what());
    } catch (const DomainError& e) {
      throw ConfigError(std::string(where) + ": " + e.what());
    }
  };
  section("problem", [&] {
    // Insulated 1D faces are valid for the FE oracle; training rejects them.
    HeatProblem trainable = cfg.problem;
    if (trainable.dimensionality() == 1) {
      if (!(trainable.h1 >= 0) || !(trainable.h2 >= 0)) throw ContractError("h1, h2 must be >= 0");
      if (trainable.h1 == 0) trainable.h1 = 1;
      if (trainable.h2 == 0) trainable.h2 = 1;
    }
    trainable.validate();
  });
  section("network", [&] { cfg.network.validate(); });
  section("training", [&] { cfg.training.validate(); });
  cfg.mesh.t_end = cfg.problem.profile.total_duration() * 60.0;
  section("fe_mesh", [&] { cfg.mesh.validate(); });

  const double lx = cfg.problem.geometry.lx;
  const double ly = cfg.problem.geometry.ly.value_or(0.0);
  if (cfg.compare.probes.empty()) {
    cfg.compare.probes.push_back({"midpoint", lx / 2, ly / 2});
    if (cfg.problem.dimensionality() == 1) cfg.compare.probes.push_back({"top", lx, 0});
  }
  for (const auto& p : cfg.compare.probes) {
    if (p.x < 0 || p.x > lx || p.y < 0 || p.y > ly) {
      throw ConfigError("compare.probes: probe '" + p.name + "' lies outside the part");
    }
  }
  if (cfg.compare.profile_points < 2) throw ConfigError("compare.profile_points: must be >= 2");
  if (!(cfg.compare.dt_s > 0)) throw ConfigError("compare.dt_s: must be > 0");
  if (cfg.sweep.profile_points < 2) throw ConfigError("sweep.profile_points: must be >= 2");
  for (double h : cfg.sweep.h1) {
    if (!(h > 0)) throw ConfigError("sweep.h1: values must be > 0");
  }
  for (double h : cfg.sweep.h2) {
    if (!(h > 0)) throw ConfigError("sweep.h2: values must be > 0");
  }
  if (cfg.heatmap.nx < 2 || cfg.heatmap.ny < 2) throw ConfigError("heatmap: nx, ny must be >= 2");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<json>: ") + e.what());
  }
  ExperimentConfig cfg;
  Reader r(root, "");
  cfg.name = r.get<std::string>("name", cfg.name);
  if (r.has("material")) cfg.problem.material = read_material(r.child("material"));
  cfg.problem.geometry = read_geometry(r.child("geometry"));
  try {
    if (r.has("air_profile")) cfg.problem.profile = read_profile(r.child("air_profile"));
  } catch (const ContractError& e) {
    throw ConfigError(std::string("air_profile: ") + e.what());
  }
  cfg.problem.init_temp = r.get("init_temp", cfg.problem.profile.start_temp());
  cfg.problem.training_window = r.get("training_window", 0.0);
  if (r.has("boundary")) {
    read_boundary(r.child("boundary"), cfg);
  } else if (cfg.problem.dimensionality() == 2) {
    throw ConfigError("boundary: required for 2D problems");
  }
  if (r.has("network")) {
    read_network(r.child("network"), cfg);
  } else {
    cfg.network.input_labels = cfg.problem.default_inputs();
  }
  if (r.has("training")) read_training(r.child("training"), cfg);
  if (r.has("fe_mesh")) read_mesh(r.child("fe_mesh"), cfg.mesh);
  if (r.has("compare")) read_compare(r.child("compare"), cfg.compare);
  if (r.has("sweep")) read_sweep(r.child("sweep"), cfg.sweep);
  if (r.has("heatmap")) read_heatmap(r.child("heatmap"), cfg.heatmap);
  if (r.has("output_dir")) cfg.output_dir = r.get<std::string>("output_dir", "");
  r.finish();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace heatpinn::cli

#include "heatpinn/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "heatpinn/errors.hpp"

namespace heatpinn {

std::string_view to_string(InputLabel l) {
  switch (l) {
    case InputLabel::x: return "x";
    case InputLabel::y: return "y";
    case InputLabel::t: return "t";
    case InputLabel::h1: return "h1";
    case InputLabel::h2: return "h2";
  }
  return "?";
}

std::string_view to_string(Architecture a) {
  return a == Architecture::plain ? "plain" : "engineered";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::elu: return "elu";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

InputLabel parse_input_label(std::string_view s) {
  for (auto l : {InputLabel::x, InputLabel::y, InputLabel::t, InputLabel::h1, InputLabel::h2}) {
    if (to_string(l) == s) return l;
  }
  throw ContractError("unknown input label '" + std::string(s) + "'");
}

Architecture parse_architecture(std::string_view s) {
  if (s == "plain") return Architecture::plain;
  if (s == "engineered") return Architecture::engineered;
  throw ContractError("unknown architecture '" + std::string(s) + "' (plain|engineered)");
}

Activation parse_activation(std::string_view s) {
  for (auto a : {Activation::elu, Activation::relu, Activation::tanh}) {
    if (to_string(a) == s) return a;
  }
  throw ContractError("unknown activation '" + std::string(s) + "' (elu|relu|tanh)");
}

bool NetworkSpec::has_input(InputLabel l) const {
  return std::find(input_labels.begin(), input_labels.end(), l) != input_labels.end();
}

void NetworkSpec::validate() const {
  for (std::size_t i = 0; i < input_labels.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (input_labels[i] == input_labels[j]) {
        throw ContractError("network spec: duplicate input label " +
                            std::string(to_string(input_labels[i])));
      }
    }
  }
  if (!has_input(InputLabel::x) || !has_input(InputLabel::t)) {
    throw ContractError("network spec: inputs must include x and t");
  }
  if (hidden_layers < 1) throw ContractError("network spec: hidden_layers must be >= 1");
  if (nodes_per_layer < 1) throw ContractError("network spec: nodes_per_layer must be >= 1");
  if (architecture == Architecture::engineered && engineered_feature_count < 1) {
    throw ContractError("network spec: engineered_feature_count must be >= 1");
  }
}

std::vector<InputLabel> NetworkSpec::bypass_inputs() const {
  std::vector<InputLabel> out;
  for (auto l : input_labels) {
    if (l == InputLabel::h1 || l == InputLabel::h2) out.push_back(l);
  }
  return out;
}

int NetworkSpec::dense_input_width() const {
  if (architecture == Architecture::plain) return static_cast<int>(input_labels.size());
  return engineered_feature_count + static_cast<int>(bypass_inputs().size());
}

std::vector<ParamSlot> build_layout(const NetworkSpec& spec) {
  spec.validate();
  std::vector<ParamSlot> layout;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    layout.push_back({std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  if (spec.architecture == Architecture::engineered) {
    const auto f = static_cast<std::size_t>(spec.engineered_feature_count);
    add("pre_t.weight", f, 1);
    add("pre_t.bias", f, 1);
    add("pre_x.weight", f, 1);
    add("pre_x.bias", f, 1);
    if (spec.dimensionality() == 2) {
      add("pre_y.weight", f, 1);
      add("pre_y.bias", f, 1);
    }
  }
  const auto w = static_cast<std::size_t>(spec.nodes_per_layer);
  std::size_t fan_in = static_cast<std::size_t>(spec.dense_input_width());
  for (int l = 0; l < spec.hidden_layers; ++l) {
    add("dense" + std::to_string(l) + ".weight", w, fan_in);
    add("dense" + std::to_string(l) + ".bias", w, 1);
    fan_in = w;
  }
  add("output.weight", 1, w);
  add("output.bias", 1, 1);
  return layout;
}

std::size_t parameter_count(const NetworkSpec& spec) {
  const auto layout = build_layout(spec);
  return layout.back().offset + layout.back().size();
}

ParamStore::ParamStore(const NetworkSpec& spec) : layout_(build_layout(spec)) {
  values_.assign(layout_.back().offset + layout_.back().size(), 0.0);
}

ParamStore::ParamStore(std::vector<ParamSlot> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  std::size_t expect = 0;
  for (const auto& s : layout_) {
    if (s.offset != expect) throw ContractError("param store: slot '" + s.name + "' is not contiguous");
    expect += s.size();
  }
  if (expect != values_.size()) {
    throw ContractError("param store: layout covers " + std::to_string(expect) +
                        " values but " + std::to_string(values_.size()) + " were given");
  }
}

const ParamSlot& ParamStore::slot(std::string_view name) const {
  for (const auto& s : layout_) {
    if (s.name == name) return s;
  }
  throw ContractError("param store: no slot named '" + std::string(name) + "'");
}

bool ParamStore::has_slot(std::string_view name) const {
  return std::any_of(layout_.begin(), layout_.end(), [&](const auto& s) { return s.name == name; });
}

std::span<double> ParamStore::operator[](std::string_view name) {
  const auto& s = slot(name);
  return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ParamStore::operator[](std::string_view name) const {
  const auto& s = slot(name);
  return std::span<const double>(values_).subspan(s.offset, s.size());
}

const ParamSlot& ParamStore::slot_of(std::size_t index) const {
  for (const auto& s : layout_) {
    if (index >= s.offset && index < s.offset + s.size()) return s;
  }
  throw ContractError("param store: index " + std::to_string(index) + " out of range");
}

ParamStore init_glorot(const NetworkSpec& spec, std::uint64_t seed) {
  ParamStore params(spec);
  std::mt19937_64 rng(seed);
  for (const auto& s : params.layout()) {
    auto values = params[s.name];
    if (s.name.ends_with(".bias")) continue;
    // Pre-layers map one scalar input to `rows` features.
    const bool pre = s.name.starts_with("pre_");
    const double fan_in = pre ? 1.0 : static_cast<double>(s.cols);
    const double fan_out = static_cast<double>(s.rows);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : values) v = dist(rng);
  }
  return params;
}

ActivationValue activation(Activation kind, double z) {
  switch (kind) {
    case Activation::elu:
      if (z >= 0) return {z, 1.0, 0.0, 0.0};
      {
        const double e = std::exp(z);
        return {e - 1.0, e, e, e};
      }
    case Activation::relu:
      if (z > 0) return {z, 1.0, 0.0, 0.0};
      return {0.0, 0.0, 0.0, 0.0};
    case Activation::tanh: {
      const double th = std::tanh(z);
      const double s = 1.0 - th * th;
      return {th, s, -2.0 * th * s, s * (6.0 * th * th - 2.0)};
    }
  }
  return {};
}

std::vector<double> engineered_layer(const NetworkSpec& spec, const ParamStore& params,
                                     const InputPoint& point) {
  if (spec.architecture != Architecture::engineered) {
    throw ContractError("engineered_layer: network has no engineered pre-layers");
  }
  const auto a = params["pre_t.weight"];
  const auto a0 = params["pre_t.bias"];
  const auto b = params["pre_x.weight"];
  const auto b0 = params["pre_x.bias"];
  const bool two_d = spec.dimensionality() == 2;
  std::vector<double> features(static_cast<std::size_t>(spec.engineered_feature_count));
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double arg = std::min(a[i] * point.t + a0[i], kExpArgClamp);
    double f = std::exp(arg) * std::sin(b[i] * point.x + b0[i]);
    if (two_d) f *= std::sin(params["pre_y.weight"][i] * point.y + params["pre_y.bias"][i]);
    features[i] = f;
  }
  return features;
}

double forward(const NetworkSpec& spec, const ParamStore& params, const InputPoint& point) {
  std::vector<double> input;
  if (spec.architecture == Architecture::engineered) {
    input = engineered_layer(spec, params, point);
    for (auto l : spec.bypass_inputs()) input.push_back(l == InputLabel::h1 ? point.h1 : point.h2);
  } else {
    for (auto l : spec.input_labels) {
      switch (l) {
        case InputLabel::x: input.push_back(point.x); break;
        case InputLabel::y: input.push_back(point.y); break;
        case InputLabel::t: input.push_back(point.t); break;
        case InputLabel::h1: input.push_back(point.h1); break;
        case InputLabel::h2: input.push_back(point.h2); break;
      }
    }
  }
  for (int l = 0; l < spec.hidden_layers; ++l) {
    const std::string name = "dense" + std::to_string(l);
    const auto& ws = params.slot(name + ".weight");
    const auto w = params[name + ".weight"];
    const auto bias = params[name + ".bias"];
    std::vector<double> next(ws.rows);
    for (std::size_t r = 0; r < ws.rows; ++r) {
      double z = bias[r];
      for (std::size_t c = 0; c < ws.cols; ++c) z += w[r + c * ws.rows] * input[c];
      next[r] = activation(spec.activation, z).value;
    }
    input = std::move(next);
  }
  const auto w = params["output.weight"];
  double out = params["output.bias"][0];
  for (std::size_t c = 0; c < input.size(); ++c) out += w[c] * input[c];
  return out;
}

}  // namespace heatpinn

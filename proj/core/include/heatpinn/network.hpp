#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heatpinn/input_point.hpp"

namespace heatpinn {

enum class InputLabel { x, y, t, h1, h2 };
enum class Architecture { plain, engineered };
enum class Activation { elu, relu, tanh };

std::string_view to_string(InputLabel l);
std::string_view to_string(Architecture a);
std::string_view to_string(Activation a);
InputLabel parse_input_label(std::string_view s);
Architecture parse_architecture(std::string_view s);
Activation parse_activation(std::string_view s);

struct NetworkSpec {
  Architecture architecture = Architecture::engineered;
  std::vector<InputLabel> input_labels{InputLabel::x, InputLabel::t};
  int hidden_layers = 6;
  int nodes_per_layer = 32;
  int engineered_feature_count = 32;
  Activation activation = Activation::elu;

  void validate() const;
  bool has_input(InputLabel l) const;
  int dimensionality() const { return has_input(InputLabel::y) ? 2 : 1; }
  /// Width of the vector entering the first dense layer.
  int dense_input_width() const;
  /// Inputs routed around the engineered pre-layers (h1, h2).
  std::vector<InputLabel> bypass_inputs() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Argument of the engineered exponential is clamped to this value.
inline constexpr double kExpArgClamp = 30.0;

// Named contiguous range of the flat parameter vector. Matrices are stored
// column-major with `rows` = fan-out and `cols` = fan-in.
struct ParamSlot {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 1;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const ParamSlot&, const ParamSlot&) = default;
};

std::vector<ParamSlot> build_layout(const NetworkSpec& spec);
std::size_t parameter_count(const NetworkSpec& spec);

class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(const NetworkSpec& spec);
  ParamStore(std::vector<ParamSlot> layout, std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<ParamSlot>& layout() const noexcept { return layout_; }

  const ParamSlot& slot(std::string_view name) const;
  bool has_slot(std::string_view name) const;
  std::span<double> operator[](std::string_view name);
  std::span<const double> operator[](std::string_view name) const;

  /// Slot containing the flat index.
  const ParamSlot& slot_of(std::size_t index) const;

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<ParamSlot> layout_;
  std::vector<double> values_;
};

/// Glorot-uniform weights, zero biases. Pre-layer weights are treated as
/// 1 -> feature_count dense maps.
ParamStore init_glorot(const NetworkSpec& spec, std::uint64_t seed);

struct ActivationValue {
  double value = 0;
  double d1 = 0;
  double d2 = 0;
  double d3 = 0;
};

ActivationValue activation(Activation kind, double z);

/// Engineered features exp(a t + a0) sin(b x + b0) [* sin(c y + c0)].
std::vector<double> engineered_layer(const NetworkSpec& spec, const ParamStore& params,
                                     const InputPoint& point);

/// Scalar prediction (value only). Independent of the derivative engine.
double forward(const NetworkSpec& spec, const ParamStore& params, const InputPoint& point);

}  // namespace heatpinn

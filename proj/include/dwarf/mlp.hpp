#pragma once

// Fully connected network with one activation on every hidden layer and an
// affine output layer.
//
// Parameter layout (flat, layer by layer):
//   [W_1 (fan_out x fan_in, row-major), b_1, W_2, b_2, ..., W_L, b_L]

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace dwarf {

enum class Activation { tanh, relu, sigmoid, rbf };

std::string_view to_string(Activation a) noexcept;
/// Accepts "tanh", "relu", "sigmoid", "rbf"; throws std::invalid_argument otherwise.
Activation parse_activation(std::string_view name);

struct MlpSpec {
  std::size_t input_dim = 2;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 2;
  Activation activation = Activation::tanh;

  [[nodiscard]] std::size_t layer_count() const noexcept { return hidden_dims.size() + 1; }
  [[nodiscard]] std::size_t fan_in(std::size_t layer) const;
  [[nodiscard]] std::size_t fan_out(std::size_t layer) const;
  [[nodiscard]] std::size_t param_count() const;
  [[nodiscard]] std::size_t widest_layer() const;

  /// Throws std::invalid_argument if any dimension is zero.
  void validate() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

using ParamVector = std::vector<double>;

/// Structured copy of one layer, used to inspect or build a ParamVector.
struct DenseLayer {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::vector<double> weights;  // fan_out x fan_in, row-major
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

std::vector<DenseLayer> unflatten(const MlpSpec& spec, std::span<const double> params);
ParamVector flatten(std::span<const DenseLayer> layers);

/// Glorot-uniform weights, zero biases. Deterministic in seed.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

double activate(Activation a, double z) noexcept;
/// da/dz expressed through z and a = activate(z).
double activate_derivative(Activation a, double z, double a_value) noexcept;

std::vector<double> forward(const MlpSpec& spec, std::span<const double> params, std::span<const double> x);

struct MlpGradient {
  ParamVector params;
  std::vector<double> input;
};

/// Vector-Jacobian products of forward() for the parameters and the input.
MlpGradient grad(const MlpSpec& spec, std::span<const double> params, std::span<const double> x,
                 std::span<const double> upstream);

/// Reusable buffers for repeated evaluation of one network. Not thread-safe;
/// give each thread its own evaluator.
class MlpEvaluator {
 public:
  explicit MlpEvaluator(MlpSpec spec);

  [[nodiscard]] const MlpSpec& spec() const noexcept { return spec_; }

  void forward(std::span<const double> params, std::span<const double> x, std::span<double> out);

  /// Recomputes the forward pass at x, then adds the parameter VJP into
  /// param_accum and writes the input VJP into x_bar.
  void backward(std::span<const double> params, std::span<const double> x, std::span<const double> upstream,
                std::span<double> param_accum, std::span<double> x_bar);

 private:
  void run_forward(std::span<const double> params, std::span<const double> x);

  MlpSpec spec_;
  std::vector<std::size_t> offsets_;            // start of each layer's weights
  std::vector<std::vector<double>> pre_;        // pre-activations of hidden layers
  std::vector<std::vector<double>> post_;       // activations; post_[0] is the input
  std::vector<double> output_;
  std::vector<double> delta_;
  std::vector<double> delta_next_;
};

}  // namespace dwarf

#include "dwarf/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace dwarf {
namespace {

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string("mlp: ") + what + " has size " + std::to_string(got) + ", expected " +
                                std::to_string(want));
  }
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::rbf: return "rbf";
    case Activation::tanh: break;
  }
  return "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "rbf") return Activation::rbf;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "' (expected tanh|relu|sigmoid|rbf)");
}

std::size_t MlpSpec::fan_in(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden_dims.at(layer - 1);
}

std::size_t MlpSpec::fan_out(std::size_t layer) const {
  return layer == hidden_dims.size() ? output_dim : hidden_dims.at(layer);
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) n += (fan_in(l) + 1) * fan_out(l);
  return n;
}

std::size_t MlpSpec::widest_layer() const {
  std::size_t w = std::max(input_dim, output_dim);
  for (const auto h : hidden_dims) w = std::max(w, h);
  return w;
}

void MlpSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) throw std::invalid_argument("MlpSpec: input/output dims must be >= 1");
  for (const auto h : hidden_dims) {
    if (h == 0) throw std::invalid_argument("MlpSpec: hidden dims must be >= 1");
  }
}

std::vector<DenseLayer> unflatten(const MlpSpec& spec, std::span<const double> params) {
  require_size(params.size(), spec.param_count(), "parameter vector");
  std::vector<DenseLayer> layers;
  layers.reserve(spec.layer_count());
  auto it = params.begin();
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    DenseLayer layer{spec.fan_in(l), spec.fan_out(l), {}, {}};
    const auto nw = static_cast<std::ptrdiff_t>(layer.fan_in * layer.fan_out);
    layer.weights.assign(it, it + nw);
    it += nw;
    layer.bias.assign(it, it + static_cast<std::ptrdiff_t>(layer.fan_out));
    it += static_cast<std::ptrdiff_t>(layer.fan_out);
    layers.push_back(std::move(layer));
  }
  return layers;
}

ParamVector flatten(std::span<const DenseLayer> layers) {
  ParamVector out;
  for (const auto& layer : layers) {
    require_size(layer.weights.size(), layer.fan_in * layer.fan_out, "layer weights");
    require_size(layer.bias.size(), layer.fan_out, "layer bias");
    out.insert(out.end(), layer.weights.begin(), layer.weights.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ParamVector out;
  out.reserve(spec.param_count());
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto fi = spec.fan_in(l);
    const auto fo = spec.fan_out(l);
    const double limit = std::sqrt(6.0 / static_cast<double>(fi + fo));
    std::uniform_real_distribution<double> uni(-limit, limit);
    for (std::size_t i = 0; i < fi * fo; ++i) out.push_back(uni(rng));
    out.insert(out.end(), fo, 0.0);
  }
  return out;
}

double activate(Activation a, double z) noexcept {
  switch (a) {
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::rbf: return std::exp(-z * z);
  }
  return z;
}

double activate_derivative(Activation a, double z, double a_value) noexcept {
  switch (a) {
    case Activation::tanh: return 1.0 - a_value * a_value;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return a_value * (1.0 - a_value);
    case Activation::rbf: return -2.0 * z * a_value;
  }
  return 1.0;
}

MlpEvaluator::MlpEvaluator(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const auto layers = spec_.layer_count();
  offsets_.resize(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets_[l] = off;
    off += (spec_.fan_in(l) + 1) * spec_.fan_out(l);
  }
  pre_.resize(spec_.hidden_dims.size());
  post_.resize(spec_.hidden_dims.size() + 1);
  post_[0].resize(spec_.input_dim);
  for (std::size_t h = 0; h < spec_.hidden_dims.size(); ++h) {
    pre_[h].resize(spec_.hidden_dims[h]);
    post_[h + 1].resize(spec_.hidden_dims[h]);
  }
  output_.resize(spec_.output_dim);
  delta_.resize(spec_.widest_layer());
  delta_next_.resize(spec_.widest_layer());
}

void MlpEvaluator::run_forward(std::span<const double> params, std::span<const double> x) {
  require_size(params.size(), spec_.param_count(), "parameter vector");
  require_size(x.size(), spec_.input_dim, "input");
  std::copy(x.begin(), x.end(), post_[0].begin());
  const auto layers = spec_.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    const auto fi = spec_.fan_in(l);
    const auto fo = spec_.fan_out(l);
    const double* w = params.data() + offsets_[l];
    const double* b = w + fi * fo;
    const double* in = post_[l].data();
    const bool hidden = l + 1 < layers;
    double* z = hidden ? pre_[l].data() : output_.data();
    for (std::size_t r = 0; r < fo; ++r) {
      double acc = b[r];
      const double* row = w + r * fi;
      for (std::size_t c = 0; c < fi; ++c) acc += row[c] * in[c];
      z[r] = acc;
    }
    if (hidden) {
      double* a = post_[l + 1].data();
      for (std::size_t r = 0; r < fo; ++r) a[r] = activate(spec_.activation, z[r]);
    }
  }
}

void MlpEvaluator::forward(std::span<const double> params, std::span<const double> x, std::span<double> out) {
  require_size(out.size(), spec_.output_dim, "output");
  run_forward(params, x);
  std::copy(output_.begin(), output_.end(), out.begin());
}

void MlpEvaluator::backward(std::span<const double> params, std::span<const double> x,
                            std::span<const double> upstream, std::span<double> param_accum,
                            std::span<double> x_bar) {
  require_size(upstream.size(), spec_.output_dim, "upstream cotangent");
  require_size(param_accum.size(), spec_.param_count(), "parameter cotangent");
  require_size(x_bar.size(), spec_.input_dim, "input cotangent");
  run_forward(params, x);

  // delta_ holds dL/dz for the current layer's pre-activation.
  std::copy(upstream.begin(), upstream.end(), delta_.begin());
  for (std::size_t l = spec_.layer_count(); l-- > 0;) {
    const auto fi = spec_.fan_in(l);
    const auto fo = spec_.fan_out(l);
    const double* w = params.data() + offsets_[l];
    double* gw = param_accum.data() + offsets_[l];
    double* gb = gw + fi * fo;
    const double* in = post_[l].data();
    for (std::size_t r = 0; r < fo; ++r) {
      const double d = delta_[r];
      gb[r] += d;
      double* grow = gw + r * fi;
      for (std::size_t c = 0; c < fi; ++c) grow[c] += d * in[c];
    }
    std::fill(delta_next_.begin(), delta_next_.begin() + static_cast<std::ptrdiff_t>(fi), 0.0);
    for (std::size_t r = 0; r < fo; ++r) {
      const double d = delta_[r];
      const double* row = w + r * fi;
      for (std::size_t c = 0; c < fi; ++c) delta_next_[c] += row[c] * d;
    }
    if (l > 0) {
      const double* z = pre_[l - 1].data();
      const double* a = post_[l].data();
      for (std::size_t c = 0; c < fi; ++c) delta_next_[c] *= activate_derivative(spec_.activation, z[c], a[c]);
    }
    std::swap(delta_, delta_next_);
  }
  std::copy(delta_.begin(), delta_.begin() + static_cast<std::ptrdiff_t>(spec_.input_dim), x_bar.begin());
}

std::vector<double> forward(const MlpSpec& spec, std::span<const double> params, std::span<const double> x) {
  MlpEvaluator eval(spec);
  std::vector<double> out(spec.output_dim);
  eval.forward(params, x, out);
  return out;
}

MlpGradient grad(const MlpSpec& spec, std::span<const double> params, std::span<const double> x,
                 std::span<const double> upstream) {
  MlpEvaluator eval(spec);
  MlpGradient g{ParamVector(spec.param_count(), 0.0), std::vector<double>(spec.input_dim, 0.0)};
  eval.backward(params, x, upstream, g.params, g.input);
  return g;
}

}  // namespace dwarf

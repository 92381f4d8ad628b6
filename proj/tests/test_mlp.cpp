#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "dwarf/mlp.hpp"

using namespace dwarf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Relative error with an absolute floor so that near-zero entries compare sensibly.
double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_CASE("parameter count follows the layout", "[mlp]") {
  CHECK(MlpSpec{2, {15}, 2, Activation::tanh}.param_count() == 77);
  CHECK(MlpSpec{2, {15, 15}, 2, Activation::rbf}.param_count() == 45 + 240 + 32);
  CHECK(MlpSpec{2, {160}, 2, Activation::tanh}.param_count() == 802);
  CHECK(MlpSpec{1, {}, 1, Activation::tanh}.param_count() == 2);
  CHECK_THROWS_AS((MlpSpec{0, {3}, 1, Activation::tanh}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((MlpSpec{2, {3, 0}, 1, Activation::tanh}.validate()), std::invalid_argument);
}

TEST_CASE("activation names parse", "[mlp]") {
  for (auto a : {Activation::tanh, Activation::relu, Activation::sigmoid, Activation::rbf}) {
    CHECK(parse_activation(to_string(a)) == a);
  }
  CHECK_THROWS_AS(parse_activation("gelu"), std::invalid_argument);
}

TEST_CASE("init_params is Glorot uniform with zero biases", "[mlp]") {
  const MlpSpec spec{2, {15, 7}, 2, Activation::tanh};
  const auto p = init_params(spec, 9);
  CHECK(p == init_params(spec, 9));
  CHECK(p != init_params(spec, 10));
  REQUIRE(p.size() == spec.param_count());
  const auto layers = unflatten(spec, p);
  for (const auto& layer : layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.fan_in + layer.fan_out));
    for (double w : layer.weights) CHECK(std::abs(w) <= limit);
    for (double b : layer.bias) CHECK(b == 0.0);
  }
}

TEST_CASE("flatten and unflatten round-trip", "[mlp]") {
  const MlpSpec spec{3, {4, 5}, 2, Activation::sigmoid};
  const auto p = init_params(spec, 1);
  const auto layers = unflatten(spec, p);
  REQUIRE(layers.size() == 3);
  CHECK(layers[0].fan_in == 3);
  CHECK(layers[0].fan_out == 4);
  CHECK(layers[0].weights[1] == p[1]);  // row 0, column 1
  CHECK(layers[0].bias[0] == p[12]);
  CHECK(flatten(layers) == p);
  CHECK_THROWS_AS(unflatten(spec, std::vector<double>(3)), std::invalid_argument);
}

TEST_CASE("forward on hand-set parameters", "[mlp]") {
  const MlpSpec spec{1, {1}, 1, Activation::tanh};
  const std::vector<double> p = {1.0, 0.0, 1.0, 0.0};  // w, b, v, c
  CHECK(forward(spec, p, std::vector<double>{0.0})[0] == 0.0);
  CHECK_THAT(forward(spec, p, std::vector<double>{1.0})[0], WithinRel(0.7615941559557649, 1e-15));
  CHECK_THROWS_AS(forward(spec, p, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("all-zero parameters give zero output", "[mlp]") {
  for (auto a : {Activation::tanh, Activation::relu, Activation::sigmoid, Activation::rbf}) {
    const MlpSpec spec{2, {6, 4}, 2, a};
    const std::vector<double> zeros(spec.param_count(), 0.0);
    const auto y = forward(spec, zeros, std::vector<double>{0.3, -0.7});
    CHECK(y == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("activation values and derivatives", "[mlp]") {
  CHECK(activate(Activation::rbf, 0.0) == 1.0);
  CHECK_THAT(activate(Activation::rbf, 1.0), WithinRel(std::exp(-1.0), 1e-15));
  CHECK(activate(Activation::relu, -2.0) == 0.0);
  CHECK(activate(Activation::relu, 2.0) == 2.0);
  CHECK(activate_derivative(Activation::relu, 0.0, 0.0) == 0.0);
  CHECK_THAT(activate(Activation::sigmoid, 0.0), WithinAbs(0.5, 1e-15));
  for (auto a : {Activation::tanh, Activation::sigmoid, Activation::rbf}) {
    for (double z : {-1.3, -0.2, 0.4, 2.1}) {
      const double h = 1e-6;
      const double fd = (activate(a, z + h) - activate(a, z - h)) / (2 * h);
      CHECK_THAT(activate_derivative(a, z, activate(a, z)), WithinAbs(fd, 1e-8));
    }
  }
}

TEST_CASE("rbf hidden activations lie in (0, 1]", "[mlp]") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = activate(Activation::rbf, g(rng));
    CHECK(a <= 1.0);
    CHECK(a >= 0.0);
  }
  CHECK(activate(Activation::rbf, 5.0) > 0.0);
}

TEST_CASE("zero upstream gives zero cotangents", "[mlp]") {
  const MlpSpec spec{2, {5}, 2, Activation::tanh};
  const auto p = init_params(spec, 4);
  const auto g = grad(spec, p, std::vector<double>{0.2, 0.9}, std::vector<double>{0.0, 0.0});
  CHECK(std::all_of(g.params.begin(), g.params.end(), [](double v) { return v == 0.0; }));
  CHECK(g.input == std::vector<double>{0.0, 0.0});
}

TEST_CASE("relu on a positive path has a closed-form input cotangent", "[mlp]") {
  // y = V relu(W x + b) + c with every pre-activation positive, so dy/dx = V W.
  const MlpSpec spec{2, {2}, 1, Activation::relu};
  const std::vector<double> p = {1.0, 2.0, 3.0, 4.0, 0.5, 0.5, 5.0, 6.0, 0.0};
  const auto g = grad(spec, p, std::vector<double>{1.0, 1.0}, std::vector<double>{2.0});
  CHECK(g.input[0] == 2.0 * (5.0 * 1.0 + 6.0 * 3.0));
  CHECK(g.input[1] == 2.0 * (5.0 * 2.0 + 6.0 * 4.0));
}

TEST_CASE("gradient matches central differences on random networks", "[mlp][property]") {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  std::uniform_int_distribution<std::size_t> depth(1, 3);
  std::uniform_int_distribution<int> act(0, 3);
  std::normal_distribution<double> g(0.0, 1.0);

  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    MlpSpec spec;
    spec.input_dim = dim(rng);
    spec.output_dim = dim(rng);
    spec.hidden_dims.resize(depth(rng));
    for (auto& h : spec.hidden_dims) h = dim(rng);
    spec.activation = static_cast<Activation>(act(rng));

    auto p = init_params(spec, rng());
    for (auto& v : p) v += 0.1 * g(rng);  // non-zero biases too
    std::vector<double> x(spec.input_dim);
    std::vector<double> up(spec.output_dim);
    for (auto& v : x) v = g(rng);
    for (auto& v : up) v = g(rng);

    const auto an = grad(spec, p, x, up);
    const double h = 1e-6;
    const auto objective = [&](const std::vector<double>& pp, const std::vector<double>& xx) {
      return dot(forward(spec, pp, xx), up);
    };
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto lo = p;
      auto hi = p;
      lo[i] -= h;
      hi[i] += h;
      const double fd = (objective(hi, x) - objective(lo, x)) / (2 * h);
      // relu kinks make the difference quotient meaningless within h of zero.
      if (spec.activation == Activation::relu && std::abs(fd - an.params[i]) > 1e-3) continue;
      worst = std::max(worst, rel_err(an.params[i], fd));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto lo = x;
      auto hi = x;
      lo[i] -= h;
      hi[i] += h;
      const double fd = (objective(p, hi) - objective(p, lo)) / (2 * h);
      if (spec.activation == Activation::relu && std::abs(fd - an.input[i]) > 1e-3) continue;
      worst = std::max(worst, rel_err(an.input[i], fd));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("evaluator accumulates into the parameter buffer", "[mlp]") {
  const MlpSpec spec{2, {4}, 2, Activation::rbf};
  const auto p = init_params(spec, 8);
  const std::vector<double> x = {0.3, -0.1};
  const std::vector<double> up = {1.0, -2.0};
  MlpEvaluator ev(spec);
  std::vector<double> acc(p.size(), 1.0);
  std::vector<double> xb(2);
  ev.backward(p, x, up, acc, xb);
  const auto g = grad(spec, p, x, up);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(acc[i] == 1.0 + g.params[i]);
  CHECK(xb == g.input);

  std::vector<double> out(2);
  ev.forward(p, x, out);
  CHECK(out == forward(spec, p, x));
}

#pragma once

// Trainable right-hand sides and the differentiable fixed-step integrator.
//
//   neural_ode:  d(phi, theta)/deta = NN(phi, theta)
//   ude:         dphi/deta   = theta              + NN_1(phi, theta)
//                dtheta/deta = -(2/eta) theta     + NN_2(phi, theta)
//
// NN_1 and NN_2 are the two outputs of one 2 -> 2 network. Gradients of the
// trajectory loss are exact for the discrete RK4 scheme: the reverse sweep
// walks every RK4 stage of every substep backwards.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dwarf/cwde.hpp"
#include "dwarf/dataset.hpp"
#include "dwarf/mlp.hpp"

namespace dwarf {

enum class ModelKind { neural_ode, ude };

std::string_view to_string(ModelKind k) noexcept;
/// Accepts "neural_ode" and "ude"; throws std::invalid_argument otherwise.
ModelKind parse_model_kind(std::string_view name);

inline constexpr std::size_t kDefaultSubsteps = 10;

struct ModelConfig {
  ModelKind kind = ModelKind::ude;
  MlpSpec spec;
  ParamVector params;
  SystemParams system;
  std::size_t substeps = kDefaultSubsteps;

  /// Throws std::invalid_argument unless dims are 2 -> 2, substeps >= 1 and
  /// params match the spec.
  void validate() const;
};

/// The learned part of a right-hand side: (phi, theta) -> 2-vector. For the
/// UDE the components are (NN_1, NN_2); for the Neural ODE the full RHS.
class Closure {
 public:
  virtual ~Closure() = default;
  [[nodiscard]] virtual std::size_t param_count() const = 0;
  virtual State eval(State u) = 0;
  /// Adds d<upstream, eval(u)>/dparams into param_accum; returns the input VJP.
  virtual State vjp(State u, State upstream, std::span<double> param_accum) = 0;
};

class NetworkClosure final : public Closure {
 public:
  NetworkClosure(const MlpSpec& spec, std::span<const double> params);
  [[nodiscard]] std::size_t param_count() const override { return params_.size(); }
  State eval(State u) override;
  State vjp(State u, State upstream, std::span<double> param_accum) override;

 private:
  MlpEvaluator eval_;
  std::span<const double> params_;
};

/// NN_1 = 0 and NN_2 = -(max(phi^2 - C, 0))^(3/2): the UDE with a perfect network.
class PhysicsOracleClosure final : public Closure {
 public:
  explicit PhysicsOracleClosure(double c) : c_(c) {}
  [[nodiscard]] std::size_t param_count() const override { return 0; }
  State eval(State u) override;
  State vjp(State u, State upstream, std::span<double> param_accum) override;

 private:
  double c_;
};

/// Raised when the integrated state stops being finite.
class DivergedTrajectory : public std::runtime_error {
 public:
  DivergedTrajectory(double eta, const std::string& what) : std::runtime_error(what), eta_(eta) {}
  [[nodiscard]] double eta() const noexcept { return eta_; }

 private:
  double eta_;
};

State model_rhs(ModelKind kind, Closure& closure, double eta, State s);
State model_rhs(const ModelConfig& cfg, double eta, State s);

/// Classical RK4 with `substeps` equal substeps per grid interval.
Trajectory integrate_model(ModelKind kind, Closure& closure, std::size_t substeps, std::span<const double> grid,
                           State s0);
Trajectory integrate_model(const ModelConfig& cfg, std::span<const double> grid, State s0);

struct LossGradient {
  double loss = 0.0;
  ParamVector gradient;
};

/// Mean squared error over the first split.train_count points and both
/// components, single shooting from the first observed state.
double trajectory_loss(ModelKind kind, Closure& closure, std::size_t substeps, const Dataset& data, Split split);
double trajectory_loss(const ModelConfig& cfg, const Dataset& data, Split split);

LossGradient loss_and_gradient(ModelKind kind, Closure& closure, std::size_t substeps, const Dataset& data,
                               Split split);
LossGradient loss_and_gradient(const ModelConfig& cfg, const Dataset& data, Split split);
ParamVector loss_gradient(const ModelConfig& cfg, const Dataset& data, Split split);

}  // namespace dwarf

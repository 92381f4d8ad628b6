#pragma once

// Full-batch Adam, BFGS with a strong-Wolfe line search, and the two-phase
// Adam -> BFGS training schedule.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwarf/dataset.hpp"
#include "dwarf/dynamics.hpp"
#include "dwarf/mlp.hpp"

namespace dwarf {

/// Returns the loss at x and writes its gradient into grad (same length as x).
/// A non-finite return value marks x as unusable.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct AdamConfig {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 0;

  void validate() const;
};

struct BfgsConfig {
  /// Length of the first trial step; the initial inverse Hessian is
  /// (init_step / |g0|) I.
  double init_step = 0.01;
  /// Maximum number of BFGS iterations.
  std::size_t epochs = 0;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double grad_tol = 1e-8;
  /// The inverse-Hessian update is skipped unless s.y > curvature_eps |s| |y|.
  double curvature_eps = 1e-10;
  std::size_t max_line_search_evals = 50;

  void validate() const;
};

struct TrainSchedule {
  AdamConfig adam;
  BfgsConfig bfgs;
  std::uint64_t seed = 0;
};

enum class OptimStatus {
  max_iterations,
  converged,
  non_finite,          // Adam hit a non-finite loss and stopped early
  line_search_failed,  // BFGS returned its best point so far
};

std::string_view to_string(OptimStatus s) noexcept;

struct OptimResult {
  ParamVector params;
  /// Adam: loss at the start of every epoch. BFGS: loss at p0 followed by
  /// the loss after every accepted step.
  std::vector<double> history;
  double final_loss = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  OptimStatus status = OptimStatus::max_iterations;
};

OptimResult adam_run(const Objective& objective, ParamVector p0, const AdamConfig& cfg);
OptimResult bfgs_run(const Objective& objective, ParamVector p0, const BfgsConfig& cfg);

/// An error raised during training, tagged with the phase it came from.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::string phase, const std::string& what)
      : std::runtime_error(phase + ": " + what), phase_(std::move(phase)) {}
  [[nodiscard]] const std::string& phase() const noexcept { return phase_; }

 private:
  std::string phase_;
};

struct TrainResult {
  ParamVector params;
  double initial_loss = 0.0;
  double adam_loss = 0.0;
  double final_loss = 0.0;
  OptimResult adam;
  OptimResult bfgs;
};

/// Objective over the network parameters of `model` for one dataset/split.
/// Diverged trajectories evaluate to +inf.
Objective make_objective(const ModelConfig& model, const Dataset& data, Split split);

/// init_params(sched.seed) -> Adam -> BFGS warm-started from Adam's result.
/// model.params is ignored.
TrainResult train(const ModelConfig& model, const Dataset& data, Split split, const TrainSchedule& sched);

}  // namespace dwarf

#pragma once

// Post-training analysis: prediction/forecast errors against the clean data,
// recovery of the missing term, convergence of phi to sqrt(C) and the
// forecasting breakdown point across training fractions.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dwarf/cwde.hpp"
#include "dwarf/dataset.hpp"
#include "dwarf/dynamics.hpp"

namespace dwarf {

/// Forecast phi-RMSE above which a run counts as a failed forecast.
inline constexpr double kBreakdownThreshold = 0.05;
inline constexpr double kConvergenceTol = 0.02;

struct ForecastMetrics {
  double train_mse = 0.0;                    // both components, training prefix
  std::optional<double> forecast_mse;        // both components, test suffix
  double train_phi_rmse = 0.0;
  std::optional<double> forecast_phi_rmse;
};

/// Errors of `predicted` against the clean values, split into prefix and suffix.
ForecastMetrics forecast_metrics(const Trajectory& predicted, const Dataset& data, Split split);

struct TermSample {
  double eta = 0.0;
  double approx = 0.0;
  double truth = 0.0;
};

/// NN_2 along the trajectory next to -(max(phi^2 - C, 0))^(3/2) on the same states.
std::vector<TermSample> recover_missing_term(const ModelConfig& cfg, const Trajectory& traj);
std::vector<TermSample> recover_missing_term(Closure& closure, const SystemParams& system, const Trajectory& traj);

/// NN_1 along the trajectory; its ground truth is identically zero.
std::vector<double> nn1_residual(const ModelConfig& cfg, const Trajectory& traj);
std::vector<double> nn1_residual(Closure& closure, const Trajectory& traj);

struct ConvergenceResult {
  bool pass = false;
  double gap = 0.0;  // |phi(eta_inf) - sqrt(C)|
};

/// Requires the trajectory to end at p.eta_inf.
ConvergenceResult convergence_check(const Trajectory& predicted, const SystemParams& p, double tol = kConvergenceTol);

enum class RunStatus { ok, diverged };

struct FitReport {
  RunStatus status = RunStatus::ok;
  std::string error;
  ModelKind kind = ModelKind::ude;
  NoiseLevel noise;
  double fraction = 1.0;
  Split split;
  SystemParams system;
  double initial_loss = 0.0;
  double adam_loss = 0.0;
  double final_loss = 0.0;
  ForecastMetrics metrics;
  std::optional<ConvergenceResult> convergence;
  Trajectory predicted;
  std::optional<std::vector<TermSample>> recovered_term;  // ude only
  std::optional<std::vector<double>> nn1;                 // ude only
  std::vector<double> adam_history;
  std::vector<double> bfgs_history;
  std::string bfgs_status;
  ParamVector params;  // empty unless requested
};

/// Fills the analysis fields of a report for a trained model.
FitReport analyse_fit(const ModelConfig& trained, const Dataset& data, Split split, double fraction);

struct BreakdownResult {
  ModelKind kind = ModelKind::ude;
  NoiseLevel noise;
  std::optional<double> breakdown_fraction;  // empty: no breakdown in the tested range
  std::optional<double> breakdown_eta;
  double threshold = kBreakdownThreshold;
  std::vector<double> tested_fractions;
};

/// Largest tested fraction whose forecast phi-RMSE exceeds the threshold.
/// Reports must share kind and noise and be sorted by descending fraction;
/// full-data runs have no forecast and are skipped, diverged runs count as
/// failed forecasts.
BreakdownResult detect_breakdown(std::span<const FitReport> reports, double threshold = kBreakdownThreshold);

}  // namespace dwarf

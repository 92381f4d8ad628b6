#include "dwarf/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace dwarf {

ForecastMetrics forecast_metrics(const Trajectory& predicted, const Dataset& data, Split split) {
  if (predicted.size() != data.size() || split.size() != data.size()) {
    throw std::invalid_argument("forecast_metrics: prediction, data and split lengths differ");
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted.etas[i] != data.clean.etas[i]) {
      throw std::invalid_argument("forecast_metrics: prediction grid differs from data grid");
    }
  }

  const auto region = [&](std::size_t begin, std::size_t end, double& mse, double& phi_rmse) {
    double sum = 0.0;
    double sum_phi = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double dp = predicted.states[i].phi - data.clean.states[i].phi;
      const double dt = predicted.states[i].theta - data.clean.states[i].theta;
      sum += dp * dp + dt * dt;
      sum_phi += dp * dp;
    }
    const auto n = static_cast<double>(end - begin);
    mse = sum / (2.0 * n);
    phi_rmse = std::sqrt(sum_phi / n);
  };

  ForecastMetrics m;
  region(0, split.train_count, m.train_mse, m.train_phi_rmse);
  if (split.test_count > 0) {
    double mse = 0.0;
    double rmse = 0.0;
    region(split.train_count, data.size(), mse, rmse);
    m.forecast_mse = mse;
    m.forecast_phi_rmse = rmse;
  }
  return m;
}

std::vector<TermSample> recover_missing_term(Closure& closure, const SystemParams& system, const Trajectory& traj) {
  std::vector<TermSample> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const State s = traj.states[i];
    out.push_back({traj.etas[i], closure.eval(s).theta, missing_term(s.phi, system.c)});
  }
  return out;
}

std::vector<TermSample> recover_missing_term(const ModelConfig& cfg, const Trajectory& traj) {
  if (cfg.kind != ModelKind::ude) throw std::invalid_argument("recover_missing_term: model is not a UDE");
  NetworkClosure closure(cfg.spec, cfg.params);
  return recover_missing_term(closure, cfg.system, traj);
}

std::vector<double> nn1_residual(Closure& closure, const Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto& s : traj.states) out.push_back(closure.eval(s).phi);
  return out;
}

std::vector<double> nn1_residual(const ModelConfig& cfg, const Trajectory& traj) {
  if (cfg.kind != ModelKind::ude) throw std::invalid_argument("nn1_residual: model is not a UDE");
  NetworkClosure closure(cfg.spec, cfg.params);
  return nn1_residual(closure, traj);
}

ConvergenceResult convergence_check(const Trajectory& predicted, const SystemParams& p, double tol) {
  if (predicted.empty() || std::abs(predicted.etas.back() - p.eta_inf) > 1e-9 * std::max(1.0, p.eta_inf)) {
    throw std::invalid_argument("convergence_check: trajectory does not reach eta_inf");
  }
  const double gap = std::abs(predicted.states.back().phi - p.sqrt_c);
  return {gap <= tol, gap};
}

FitReport analyse_fit(const ModelConfig& trained, const Dataset& data, Split split, double fraction) {
  FitReport r;
  r.kind = trained.kind;
  r.noise = data.noise;
  r.fraction = fraction;
  r.split = split;
  r.system = data.params;
  r.predicted = integrate_model(trained, data.observed.etas, data.observed.states.front());
  r.metrics = forecast_metrics(r.predicted, data, split);
  if (std::abs(r.predicted.etas.back() - data.params.eta_inf) <= 1e-9 * data.params.eta_inf) {
    r.convergence = convergence_check(r.predicted, data.params);
  }
  if (trained.kind == ModelKind::ude) {
    r.recovered_term = recover_missing_term(trained, r.predicted);
    r.nn1 = nn1_residual(trained, r.predicted);
  }
  return r;
}

BreakdownResult detect_breakdown(std::span<const FitReport> reports, double threshold) {
  if (reports.empty()) throw std::invalid_argument("detect_breakdown: no reports");
  BreakdownResult out;
  out.kind = reports.front().kind;
  out.noise = reports.front().noise;
  out.threshold = threshold;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (r.kind != out.kind || r.noise.label != out.noise.label) {
      throw std::invalid_argument("detect_breakdown: reports mix model kinds or noise levels");
    }
    if (i > 0 && !(r.fraction < reports[i - 1].fraction)) {
      throw std::invalid_argument("detect_breakdown: fractions must be strictly descending");
    }
    out.tested_fractions.push_back(r.fraction);
  }

  for (const auto& r : reports) {
    if (r.split.test_count == 0) continue;
    const bool failed = r.status == RunStatus::diverged ||
                        (r.metrics.forecast_phi_rmse && !(*r.metrics.forecast_phi_rmse <= threshold));
    if (!failed) continue;
    out.breakdown_fraction = r.fraction;
    const auto n = r.split.size();
    const auto grid = make_grid(r.system, n);
    out.breakdown_eta = grid.at(split_prefix(n, r.fraction).train_count - 1);
    break;
  }
  return out;
}

}  // namespace dwarf

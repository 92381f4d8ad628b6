#include "dwarf/optimizers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace dwarf {
namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Counts evaluations and maps non-finite gradients to a non-finite loss.
struct CountedObjective {
  const Objective& fn;
  std::size_t evaluations = 0;

  double operator()(const Vec& x, Vec& g) {
    ++evaluations;
    g.resize(x.size());
    const double f = fn(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                        std::span<double>(g.data(), static_cast<std::size_t>(g.size())));
    if (!std::isfinite(f) || !all_finite(std::span<const double>(g.data(), static_cast<std::size_t>(g.size())))) {
      return std::numeric_limits<double>::infinity();
    }
    return f;
  }
};

struct LinePoint {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative g(x + alpha d)^T d
  Vec g;
};

// Minimiser of the cubic interpolating (a, fa, da) and (b, fb, db), kept
// inside the middle 80% of [a, b]; falls back to bisection.
double interpolate(const LinePoint& a, const LinePoint& b) {
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  const double mid = 0.5 * (lo + hi);
  if (!std::isfinite(a.f) || !std::isfinite(b.f)) return mid;
  const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  if (disc < 0.0) return mid;
  const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
  const double t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) return mid;
  return t;
}

struct LineSearchResult {
  bool ok = false;
  LinePoint point;  // accepted point when ok, otherwise the lowest point seen
};

// Strong-Wolfe search along d: bracketing phase followed by zoom.
LineSearchResult strong_wolfe(CountedObjective& obj, const Vec& x, double f0, double slope0, const Vec& d,
                              double alpha0, const BfgsConfig& cfg) {
  std::size_t evals = 0;
  LineSearchResult best;
  best.point.alpha = 0.0;
  best.point.f = f0;

  const auto evaluate = [&](double alpha) {
    LinePoint p;
    p.alpha = alpha;
    p.f = obj(x + alpha * d, p.g);
    p.slope = std::isfinite(p.f) ? p.g.dot(d) : std::numeric_limits<double>::quiet_NaN();
    ++evals;
    if (p.f < best.point.f) best.point = p;
    return p;
  };
  const auto armijo_fails = [&](const LinePoint& p, const LinePoint& lo) {
    return !std::isfinite(p.f) || p.f > f0 + cfg.wolfe_c1 * p.alpha * slope0 || p.f >= lo.f;
  };
  const auto curvature_ok = [&](const LinePoint& p) { return std::abs(p.slope) <= -cfg.wolfe_c2 * slope0; };

  const auto zoom = [&](LinePoint lo, LinePoint hi) -> LineSearchResult {
    while (evals < cfg.max_line_search_evals) {
      const LinePoint p = evaluate(interpolate(lo, hi));
      if (armijo_fails(p, lo)) {
        hi = p;
      } else {
        if (curvature_ok(p)) return {true, p};
        if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = p;
      }
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
    }
    return {false, best.point};
  };

  LinePoint prev;
  prev.alpha = 0.0;
  prev.f = f0;
  prev.slope = slope0;
  double alpha = alpha0;
  bool first = true;
  while (evals < cfg.max_line_search_evals) {
    const LinePoint p = evaluate(alpha);
    if (!std::isfinite(p.f)) {
      // Overshot into a region where the model blows up; pull back.
      alpha = 0.5 * (prev.alpha + alpha);
      continue;
    }
    if (p.f > f0 + cfg.wolfe_c1 * alpha * slope0 || (!first && p.f >= prev.f)) return zoom(prev, p);
    if (curvature_ok(p)) return {true, p};
    if (p.slope >= 0.0) return zoom(p, prev);
    prev = p;
    alpha *= 2.0;
    first = false;
  }
  return {false, best.point};
}

}  // namespace

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("AdamConfig: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("AdamConfig: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("AdamConfig: eps must be positive");
}

void BfgsConfig::validate() const {
  if (!(init_step > 0.0)) throw std::invalid_argument("BfgsConfig: init_step must be positive");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw std::invalid_argument("BfgsConfig: need 0 < c1 < c2 < 1");
  }
  if (!(grad_tol >= 0.0)) throw std::invalid_argument("BfgsConfig: grad_tol must be non-negative");
  if (max_line_search_evals == 0) throw std::invalid_argument("BfgsConfig: line search needs evaluations");
}

std::string_view to_string(OptimStatus s) noexcept {
  switch (s) {
    case OptimStatus::converged: return "converged";
    case OptimStatus::non_finite: return "non_finite";
    case OptimStatus::line_search_failed: return "line_search_failed";
    case OptimStatus::max_iterations: break;
  }
  return "max_iterations";
}

OptimResult adam_run(const Objective& objective, ParamVector p0, const AdamConfig& cfg) {
  cfg.validate();
  CountedObjective obj{objective};
  const auto n = static_cast<Eigen::Index>(p0.size());
  Vec x = Eigen::Map<const Vec>(p0.data(), n);
  Vec last_finite = x;  // most recent iterate with a finite loss
  Vec m = Vec::Zero(n);
  Vec v = Vec::Zero(n);
  Vec g(n);
  OptimResult out;
  out.history.reserve(cfg.epochs);

  for (std::size_t t = 1; t <= cfg.epochs; ++t) {
    const double f = obj(x, g);
    if (!std::isfinite(f)) {
      if (t == 1) throw std::invalid_argument("adam_run: objective is not finite at p0");
      out.status = OptimStatus::non_finite;
      break;
    }
    out.history.push_back(f);
    last_finite = x;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    x.array() -= cfg.lr * (m / c1).array() / ((v / c2).array().sqrt() + cfg.eps);
    out.iterations = t;
  }

  if (out.status != OptimStatus::non_finite) {
    out.final_loss = obj(x, g);
    if (!std::isfinite(out.final_loss)) {
      if (out.history.empty()) throw std::invalid_argument("adam_run: objective is not finite at p0");
      out.status = OptimStatus::non_finite;
    }
  }
  if (out.status == OptimStatus::non_finite) {
    x = last_finite;
    out.final_loss = out.history.back();
  }
  out.params.assign(x.data(), x.data() + n);
  out.evaluations = obj.evaluations;
  return out;
}

OptimResult bfgs_run(const Objective& objective, ParamVector p0, const BfgsConfig& cfg) {
  cfg.validate();
  CountedObjective obj{objective};
  const auto n = static_cast<Eigen::Index>(p0.size());
  Vec x = Eigen::Map<const Vec>(p0.data(), n);
  Vec g(n);
  double f = obj(x, g);
  if (!std::isfinite(f)) throw std::invalid_argument("bfgs_run: objective is not finite at p0");

  OptimResult out;
  out.history.push_back(f);
  const auto finish = [&](OptimStatus status) {
    out.status = status;
    out.params.assign(x.data(), x.data() + n);
    out.final_loss = f;
    out.evaluations = obj.evaluations;
    return out;
  };
  if (g.norm() <= cfg.grad_tol) return finish(OptimStatus::converged);

  Mat h = Mat::Identity(n, n) * (cfg.init_step / g.norm());
  bool scaled = false;
  for (std::size_t k = 0; k < cfg.epochs; ++k) {
    Vec d = -h * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      // Lost positive definiteness numerically; restart from a scaled identity.
      h = Mat::Identity(n, n) * (cfg.init_step / g.norm());
      d = -h * g;
      slope = g.dot(d);
    }
    const auto ls = strong_wolfe(obj, x, f, slope, d, 1.0, cfg);
    if (!ls.ok) {
      if (ls.point.f < f) {
        x += ls.point.alpha * d;
        f = ls.point.f;
        g = ls.point.g;
        out.history.push_back(f);
        out.iterations = k + 1;
      }
      return finish(OptimStatus::line_search_failed);
    }

    const Vec s = ls.point.alpha * d;
    const Vec y = ls.point.g - g;
    x += s;
    f = ls.point.f;
    g = ls.point.g;
    out.history.push_back(f);
    out.iterations = k + 1;
    if (g.norm() <= cfg.grad_tol) return finish(OptimStatus::converged);

    const double sy = s.dot(y);
    if (sy > cfg.curvature_eps * s.norm() * y.norm()) {
      if (!scaled) {
        h = Mat::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vec hy = h * y;
      const double yhy = y.dot(hy);
      h.noalias() -= rho * (s * hy.transpose() + hy * s.transpose());
      h.noalias() += (rho * rho * yhy + rho) * (s * s.transpose());
    }
  }
  return finish(OptimStatus::max_iterations);
}

Objective make_objective(const ModelConfig& model, const Dataset& data, Split split) {
  return [model, &data, split](std::span<const double> x, std::span<double> grad) {
    NetworkClosure closure(model.spec, x);
    try {
      const auto lg = loss_and_gradient(model.kind, closure, model.substeps, data, split);
      std::copy(lg.gradient.begin(), lg.gradient.end(), grad.begin());
      return lg.loss;
    } catch (const DivergedTrajectory&) {
      std::fill(grad.begin(), grad.end(), 0.0);
      return std::numeric_limits<double>::infinity();
    }
  };
}

TrainResult train(const ModelConfig& model, const Dataset& data, Split split, const TrainSchedule& sched) {
  ModelConfig cfg = model;
  cfg.params = init_params(cfg.spec, sched.seed);
  cfg.validate();
  const Objective objective = make_objective(cfg, data, split);

  TrainResult out;
  {
    ParamVector scratch(cfg.params.size());
    out.initial_loss = objective(cfg.params, scratch);
  }
  if (!std::isfinite(out.initial_loss)) {
    throw TrainingError("init", "loss is not finite at the initial parameters");
  }

  try {
    out.adam = adam_run(objective, cfg.params, sched.adam);
  } catch (const std::exception& e) {
    throw TrainingError("adam", e.what());
  }
  out.adam_loss = out.adam.final_loss;

  try {
    out.bfgs = bfgs_run(objective, out.adam.params, sched.bfgs);
  } catch (const std::exception& e) {
    throw TrainingError("bfgs", e.what());
  }
  out.params = out.bfgs.params;
  out.final_loss = out.bfgs.final_loss;
  return out;
}

}  // namespace dwarf

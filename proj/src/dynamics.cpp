#include "dwarf/dynamics.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace dwarf {
namespace {

State axpy(State y, double a, State k) { return {y.phi + a * k.phi, y.theta + a * k.theta}; }

bool finite(State s) { return std::isfinite(s.phi) && std::isfinite(s.theta); }

// Inputs of the four RK4 stages of every substep, in forward order.
struct StageTape {
  std::vector<State> inputs;
  std::vector<double> etas;
  std::vector<double> steps;  // one per substep
};

void check_split(const Dataset& data, Split split) {
  if (split.train_count < 2 || split.size() != data.size()) {
    throw std::invalid_argument("split does not match dataset");
  }
}

Trajectory integrate_impl(ModelKind kind, Closure& closure, std::size_t substeps, std::span<const double> grid,
                          State s0, StageTape* tape) {
  if (substeps == 0) throw std::invalid_argument("integrate_model: substeps must be >= 1");
  if (!finite(s0)) throw std::invalid_argument("integrate_model: initial state is not finite");
  Trajectory out;
  check_grid(grid);
  out.etas.assign(grid.begin(), grid.end());
  out.states.reserve(grid.size());
  if (grid.empty()) return out;
  out.states.push_back(s0);
  if (tape) {
    const auto stages = (grid.size() - 1) * substeps;
    tape->inputs.reserve(4 * stages);
    tape->etas.reserve(4 * stages);
    tape->steps.reserve(stages);
  }

  State y = s0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double a = grid[i - 1];
    const double h = (grid[i] - a) / static_cast<double>(substeps);
    for (std::size_t j = 0; j < substeps; ++j) {
      const double eta = a + static_cast<double>(j) * h;
      const std::array<double, 4> stage_eta = {eta, eta + 0.5 * h, eta + 0.5 * h, eta + h};
      const State u1 = y;
      const State k1 = model_rhs(kind, closure, stage_eta[0], u1);
      const State u2 = axpy(y, 0.5 * h, k1);
      const State k2 = model_rhs(kind, closure, stage_eta[1], u2);
      const State u3 = axpy(y, 0.5 * h, k2);
      const State k3 = model_rhs(kind, closure, stage_eta[2], u3);
      const State u4 = axpy(y, h, k3);
      const State k4 = model_rhs(kind, closure, stage_eta[3], u4);
      y = {y.phi + h / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi),
           y.theta + h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta)};
      if (!finite(y)) {
        std::ostringstream msg;
        msg << "trajectory diverged at eta=" << stage_eta[3];
        throw DivergedTrajectory(stage_eta[3], msg.str());
      }
      if (tape) {
        tape->inputs.insert(tape->inputs.end(), {u1, u2, u3, u4});
        tape->etas.insert(tape->etas.end(), stage_eta.begin(), stage_eta.end());
        tape->steps.push_back(h);
      }
    }
    out.states.push_back(y);
  }
  return out;
}

// VJP of model_rhs with respect to (params, state).
State rhs_vjp(ModelKind kind, Closure& closure, double eta, State u, State upstream, std::span<double> param_accum) {
  State u_bar = closure.vjp(u, upstream, param_accum);
  if (kind == ModelKind::ude) {
    u_bar.theta += upstream.phi - (2.0 / eta) * upstream.theta;
  }
  return u_bar;
}

}  // namespace

std::string_view to_string(ModelKind k) noexcept { return k == ModelKind::ude ? "ude" : "neural_ode"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "ude") return ModelKind::ude;
  if (name == "neural_ode") return ModelKind::neural_ode;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "' (expected neural_ode|ude)");
}

void ModelConfig::validate() const {
  spec.validate();
  if (spec.input_dim != 2 || spec.output_dim != 2) {
    throw std::invalid_argument("ModelConfig: network must map 2 inputs to 2 outputs");
  }
  if (substeps < 1) throw std::invalid_argument("ModelConfig: substeps must be >= 1");
  if (params.size() != spec.param_count()) {
    throw std::invalid_argument("ModelConfig: parameter vector does not match network spec");
  }
}

NetworkClosure::NetworkClosure(const MlpSpec& spec, std::span<const double> params)
    : eval_(spec), params_(params) {
  if (params.size() != spec.param_count()) {
    throw std::invalid_argument("NetworkClosure: parameter vector does not match network spec");
  }
}

State NetworkClosure::eval(State u) {
  const std::array<double, 2> x = {u.phi, u.theta};
  std::array<double, 2> out{};
  eval_.forward(params_, x, out);
  return {out[0], out[1]};
}

State NetworkClosure::vjp(State u, State upstream, std::span<double> param_accum) {
  const std::array<double, 2> x = {u.phi, u.theta};
  const std::array<double, 2> up = {upstream.phi, upstream.theta};
  std::array<double, 2> x_bar{};
  eval_.backward(params_, x, up, param_accum, x_bar);
  return {x_bar[0], x_bar[1]};
}

State PhysicsOracleClosure::eval(State u) { return {0.0, missing_term(u.phi, c_)}; }

State PhysicsOracleClosure::vjp(State u, State upstream, std::span<double> /*param_accum*/) {
  const double r = std::sqrt(c_);
  const double base = (u.phi - r) * (u.phi + r);
  const double d_dphi = base > 0.0 ? -3.0 * u.phi * std::sqrt(base) : 0.0;
  return {upstream.theta * d_dphi, 0.0};
}

State model_rhs(ModelKind kind, Closure& closure, double eta, State s) {
  const State nn = closure.eval(s);
  if (kind == ModelKind::neural_ode) return nn;
  return {s.theta + nn.phi, -(2.0 / eta) * s.theta + nn.theta};
}

State model_rhs(const ModelConfig& cfg, double eta, State s) {
  NetworkClosure closure(cfg.spec, cfg.params);
  return model_rhs(cfg.kind, closure, eta, s);
}

Trajectory integrate_model(ModelKind kind, Closure& closure, std::size_t substeps, std::span<const double> grid,
                           State s0) {
  return integrate_impl(kind, closure, substeps, grid, s0, nullptr);
}

Trajectory integrate_model(const ModelConfig& cfg, std::span<const double> grid, State s0) {
  cfg.validate();
  NetworkClosure closure(cfg.spec, cfg.params);
  return integrate_impl(cfg.kind, closure, cfg.substeps, grid, s0, nullptr);
}

double trajectory_loss(ModelKind kind, Closure& closure, std::size_t substeps, const Dataset& data, Split split) {
  check_split(data, split);
  const auto m = split.train_count;
  const std::span<const double> grid(data.observed.etas.data(), m);
  const auto traj = integrate_impl(kind, closure, substeps, grid, data.observed.states.front(), nullptr);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dp = traj.states[i].phi - data.observed.states[i].phi;
    const double dt = traj.states[i].theta - data.observed.states[i].theta;
    sum += dp * dp + dt * dt;
  }
  return sum / static_cast<double>(2 * m);
}

double trajectory_loss(const ModelConfig& cfg, const Dataset& data, Split split) {
  cfg.validate();
  NetworkClosure closure(cfg.spec, cfg.params);
  return trajectory_loss(cfg.kind, closure, cfg.substeps, data, split);
}

LossGradient loss_and_gradient(ModelKind kind, Closure& closure, std::size_t substeps, const Dataset& data,
                               Split split) {
  check_split(data, split);
  const auto m = split.train_count;
  const std::span<const double> grid(data.observed.etas.data(), m);
  StageTape tape;
  const auto traj = integrate_impl(kind, closure, substeps, grid, data.observed.states.front(), &tape);

  LossGradient out;
  out.gradient.assign(closure.param_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(2 * m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dp = traj.states[i].phi - data.observed.states[i].phi;
    const double dt = traj.states[i].theta - data.observed.states[i].theta;
    sum += dp * dp + dt * dt;
  }
  out.loss = sum * scale;

  // The first point is the fixed initial state and carries no gradient.
  State y_bar{};
  std::size_t step = tape.steps.size();

  for (std::size_t i = m; i-- > 1;) {
    const State r = {traj.states[i].phi - data.observed.states[i].phi,
                     traj.states[i].theta - data.observed.states[i].theta};
    y_bar.phi += 2.0 * scale * r.phi;
    y_bar.theta += 2.0 * scale * r.theta;

    for (std::size_t j = 0; j < substeps; ++j) {
      --step;
      const double h = tape.steps[step];
      const State* u = &tape.inputs[4 * step];
      const double* eta = &tape.etas[4 * step];

      State k1_bar = {h / 6.0 * y_bar.phi, h / 6.0 * y_bar.theta};
      State k2_bar = {h / 3.0 * y_bar.phi, h / 3.0 * y_bar.theta};
      State k3_bar = k2_bar;
      const State k4_bar = k1_bar;
      State y_prev_bar = y_bar;

      State ub = rhs_vjp(kind, closure, eta[3], u[3], k4_bar, out.gradient);
      y_prev_bar = axpy(y_prev_bar, 1.0, ub);
      k3_bar = axpy(k3_bar, h, ub);

      ub = rhs_vjp(kind, closure, eta[2], u[2], k3_bar, out.gradient);
      y_prev_bar = axpy(y_prev_bar, 1.0, ub);
      k2_bar = axpy(k2_bar, 0.5 * h, ub);

      ub = rhs_vjp(kind, closure, eta[1], u[1], k2_bar, out.gradient);
      y_prev_bar = axpy(y_prev_bar, 1.0, ub);
      k1_bar = axpy(k1_bar, 0.5 * h, ub);

      ub = rhs_vjp(kind, closure, eta[0], u[0], k1_bar, out.gradient);
      y_bar = axpy(y_prev_bar, 1.0, ub);
    }
  }
  return out;
}

LossGradient loss_and_gradient(const ModelConfig& cfg, const Dataset& data, Split split) {
  cfg.validate();
  NetworkClosure closure(cfg.spec, cfg.params);
  return loss_and_gradient(cfg.kind, closure, cfg.substeps, data, split);
}

ParamVector loss_gradient(const ModelConfig& cfg, const Dataset& data, Split split) {
  return loss_and_gradient(cfg, data, split).gradient;
}

}  // namespace dwarf

#include "dwarf/cwde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dwarf {
namespace {

State rk4_step(double eta, State y, double h, const SystemParams& p) {
  const State k1 = cwde_rhs(eta, y, p);
  const State k2 = cwde_rhs(eta + 0.5 * h, {y.phi + 0.5 * h * k1.phi, y.theta + 0.5 * h * k1.theta}, p);
  const State k3 = cwde_rhs(eta + 0.5 * h, {y.phi + 0.5 * h * k2.phi, y.theta + 0.5 * h * k2.theta}, p);
  const State k4 = cwde_rhs(eta + h, {y.phi + h * k3.phi, y.theta + h * k3.theta}, p);
  return {y.phi + h / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi),
          y.theta + h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta)};
}

// Integrates from (a, y) to b in equal substeps no longer than max_h.
State advance(double a, State y, double b, double max_h, const SystemParams& p) {
  if (b <= a) return y;
  const auto steps = static_cast<std::size_t>(std::ceil((b - a) / max_h - 1e-9));
  const std::size_t n = steps == 0 ? 1 : steps;
  const double h = (b - a) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    y = rk4_step(a + static_cast<double>(i) * h, y, h, p);
  }
  return y;
}

}  // namespace

SystemParams SystemParams::make(double c, double eta0, double eta_inf) {
  if (!(c > 0.0 && c < 1.0)) {
    throw std::invalid_argument("SystemParams: C must lie in (0, 1)");
  }
  if (!(eta0 > 0.0)) {
    throw std::invalid_argument("SystemParams: eta0 must be positive");
  }
  if (!(eta_inf > eta0)) {
    throw std::invalid_argument("SystemParams: eta_inf must exceed eta0");
  }
  return SystemParams{c, std::sqrt(c), eta0, eta_inf};
}

SystemParams standard_system() { return SystemParams::make(kDefaultC, kDefaultEta0, kDefaultEtaInf); }

void check_grid(std::span<const double> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw std::invalid_argument("grid must be strictly increasing");
    }
  }
}

void Trajectory::validate() const {
  if (etas.size() != states.size()) {
    throw std::invalid_argument("Trajectory: etas and states differ in length");
  }
  check_grid(etas);
}

State cwde_rhs(double eta, State s, const SystemParams& p) {
  const double base = (s.phi - p.sqrt_c) * (s.phi + p.sqrt_c);
  if (base < 0.0 || std::isnan(base)) {
    std::ostringstream msg;
    msg << "cwde_rhs: phi^2 < C at eta=" << eta << " (phi=" << s.phi << ")";
    throw DomainError(eta, s.phi, msg.str());
  }
  return {s.theta, -(2.0 / eta) * s.theta - base * std::sqrt(base)};
}

double missing_term(double phi, double c) noexcept {
  const double r = std::sqrt(c);
  const double base = std::max((phi - r) * (phi + r), 0.0);
  return -base * std::sqrt(base);
}

State series_init(double eta0, const SystemParams& p) {
  const double base = 1.0 - p.c;
  const double a = base * std::sqrt(base);
  return {1.0 - a * eta0 * eta0 / 6.0, -a * eta0 / 3.0};
}

Trajectory solve_reference(const SystemParams& p, std::span<const double> grid, double max_substep) {
  if (!(max_substep > 0.0)) {
    throw std::invalid_argument("solve_reference: substep must be positive");
  }
  Trajectory out;
  check_grid(grid);
  out.etas.assign(grid.begin(), grid.end());
  out.states.reserve(grid.size());
  if (grid.empty()) return out;
  if (grid.front() < p.eta0 || grid.back() > p.eta_inf) {
    throw std::invalid_argument("solve_reference: grid must lie inside [eta0, eta_inf]");
  }

  double eta = p.eta0;
  State y = series_init(p.eta0, p);
  for (const double target : grid) {
    y = advance(eta, y, target, max_substep, p);
    eta = target;
    out.states.push_back(y);
  }
  return out;
}

double find_domain_end(const SystemParams& p, double tol, double eta_budget) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("find_domain_end: tol must be positive");
  }
  const auto reached = [&](const State& s) { return s.phi - p.sqrt_c <= tol; };

  double eta = p.eta0;
  State y = series_init(p.eta0, p);
  if (reached(y)) return eta;

  const double h = kReferenceSubstep;
  while (eta < eta_budget) {
    bool crossed = false;
    State next{};
    try {
      next = rk4_step(eta, y, h, p);
      crossed = reached(next);
    } catch (const DomainError&) {
      // Stepped past phi = sqrt(C); the crossing is inside this step.
      crossed = true;
    }
    if (crossed) {
      double lo = 0.0;
      double hi = h;
      for (int it = 0; it < 60 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        bool mid_reached = false;
        try {
          mid_reached = reached(rk4_step(eta, y, mid, p));
        } catch (const DomainError&) {
          mid_reached = true;
        }
        (mid_reached ? hi : lo) = mid;
      }
      return eta + hi;
    }
    y = next;
    eta += h;
  }
  std::ostringstream msg;
  msg << "find_domain_end: phi did not approach sqrt(C) within eta <= " << eta_budget;
  throw std::runtime_error(msg.str());
}

}  // namespace dwarf

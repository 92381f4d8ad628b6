#pragma once

// Chandrasekhar white dwarf equation in first-order form
//
//   dphi/deta   = theta
//   dtheta/deta = -(2/eta) theta - (phi^2 - C)^(3/2)
//
// plus the near-origin series start, a fixed-step RK4 reference solver and
// the search for the right edge of the solvable interval.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwarf {

inline constexpr double kDefaultC = 0.01;
inline constexpr double kDefaultEta0 = 0.05;
inline constexpr double kDefaultEtaInf = 5.325;

/// Substep used by the reference solver between requested grid points.
inline constexpr double kReferenceSubstep = 1e-4;

/// Tolerance on phi - sqrt(C) that places the domain end at ~5.325 for C = 0.01.
inline constexpr double kDomainEndTol = 2e-3;

struct SystemParams {
  double c = kDefaultC;
  double sqrt_c = 0.1;
  double eta0 = kDefaultEta0;
  double eta_inf = kDefaultEtaInf;

  /// Validating constructor; throws std::invalid_argument on a bad combination.
  static SystemParams make(double c, double eta0, double eta_inf);

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// C = 0.01 on [0.05, 5.325].
SystemParams standard_system();

/// Dimensionless density and its gradient. Also used for derivatives.
struct State {
  double phi = 0.0;
  double theta = 0.0;

  friend bool operator==(const State&, const State&) = default;
};

struct Trajectory {
  std::vector<double> etas;
  std::vector<State> states;

  [[nodiscard]] std::size_t size() const noexcept { return etas.size(); }
  [[nodiscard]] bool empty() const noexcept { return etas.empty(); }

  /// Throws std::invalid_argument unless lengths match and etas strictly increase.
  void validate() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Throws std::invalid_argument unless grid is strictly increasing.
void check_grid(std::span<const double> grid);

/// Raised when phi^2 < C, i.e. the state left the physical region.
class DomainError : public std::domain_error {
 public:
  DomainError(double eta, double phi, const std::string& what)
      : std::domain_error(what), eta_(eta), phi_(phi) {}
  [[nodiscard]] double eta() const noexcept { return eta_; }
  [[nodiscard]] double phi() const noexcept { return phi_; }

 private:
  double eta_;
  double phi_;
};

/// Right-hand side of the first-order system. Throws DomainError when phi^2 < C.
State cwde_rhs(double eta, State s, const SystemParams& p);

/// -(phi^2 - C)^(3/2) with the base clamped at zero. Never throws.
double missing_term(double phi, double c) noexcept;

/// Second-order Taylor start at eta0 from phi(0) = 1, phi'(0) = 0.
State series_init(double eta0, const SystemParams& p);

/// Fixed-step RK4 of the true system from series_init(p.eta0) to each grid point.
/// Substeps between consecutive points are equal and no longer than max_substep.
Trajectory solve_reference(const SystemParams& p, std::span<const double> grid,
                           double max_substep = kReferenceSubstep);

/// First eta where phi(eta) - sqrt(C) <= tol, found by stepping then bisecting
/// inside the bracketing step. Throws std::runtime_error if eta_budget is exceeded.
double find_domain_end(const SystemParams& p, double tol = kDomainEndTol,
                       double eta_budget = 50.0);

}  // namespace dwarf

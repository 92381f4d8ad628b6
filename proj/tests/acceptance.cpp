// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dwarf/analysis.hpp"
#include "dwarf/commands.hpp"
#include "dwarf/run_config.hpp"

using namespace dwarf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Every training run is cached by its full config so criteria can share runs.
class Runs {
 public:
  const FitReport& get(const RunConfig& cfg) {
    const auto key = to_json(cfg).dump();
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      const auto t0 = Clock::now();
      auto r = run_fit(cfg, dataset(cfg));
      std::printf("  trained %s noise=%s fraction=%.2f: final_loss=%.4g (%.1f s)\n", to_string(cfg.kind).data(),
                  to_string(cfg.noise).data(), cfg.fraction, r.final_loss, seconds_since(t0));
      std::fflush(stdout);
      it = cache_.emplace(key, std::move(r)).first;
    }
    return it->second;
  }

  FitReport fresh(const RunConfig& cfg) { return run_fit(cfg, dataset(cfg)); }

 private:
  const Dataset& dataset(const RunConfig& cfg) {
    const auto key = std::string(to_string(cfg.noise)) + "/" + std::to_string(cfg.data_seed);
    auto it = data_.find(key);
    if (it == data_.end()) it = data_.emplace(key, make_dataset(cfg)).first;
    return it->second;
  }

  std::map<std::string, FitReport> cache_;
  std::map<std::string, Dataset> data_;
};

Outcome domain_end() {
  const auto t0 = Clock::now();
  const double end = find_domain_end(standard_system());
  const double secs = seconds_since(t0);
  return {end >= 5.305 && end <= 5.345 && secs < 5.0,
          "eta_inf = " + fmt("%.6f", end) + " in " + fmt("%.3f", secs) + " s"};
}

Outcome grid_anchors() {
  const auto grid = make_grid(standard_system(), 100);
  const double e40 = grid[39];
  const double e10 = grid[9];
  return {std::abs(e40 - 2.128030) <= 1e-6 && std::abs(e10 - 0.529545) <= 1e-6,
          "eta_40 = " + fmt("%.6f", e40) + ", eta_10 = " + fmt("%.6f", e10)};
}

Outcome gradient_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> width(2, 6);
  std::uniform_int_distribution<std::size_t> depth(1, 2);
  std::uniform_int_distribution<std::size_t> substeps(1, 4);
  std::uniform_int_distribution<int> act(0, 3);
  std::uniform_int_distribution<int> noise(0, 2);
  std::uniform_real_distribution<double> frac(0.3, 1.0);
  const auto sys = SystemParams::make(0.01, 0.05, 2.5);

  double worst = 0.0;
  for (int draw = 0; draw < 25; ++draw) {
    ModelConfig m;
    m.kind = draw % 2 == 0 ? ModelKind::neural_ode : ModelKind::ude;
    m.spec = {2, std::vector<std::size_t>(depth(rng)), 2, static_cast<Activation>(act(rng))};
    if (m.spec.activation == Activation::relu) m.spec.activation = Activation::tanh;
    for (auto& w : m.spec.hidden_dims) w = width(rng);
    m.params = init_params(m.spec, rng());
    for (auto& v : m.params) v *= 0.5;
    m.system = sys;
    m.substeps = substeps(rng);
    const auto data = generate(sys, 15, NoiseLevel::from_label(static_cast<NoiseLabel>(noise(rng))), rng());
    const auto split = split_prefix(data, frac(rng));

    const auto an = loss_and_gradient(m, data, split);
    std::vector<double> fd(m.params.size());
    double scale = 1e-6;
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      auto hi = m;
      auto lo = m;
      hi.params[i] += 1e-6;
      lo.params[i] -= 1e-6;
      fd[i] = (trajectory_loss(hi, data, split) - trajectory_loss(lo, data, split)) / 2e-6;
      scale = std::max(scale, std::abs(fd[i]));
    }
    for (std::size_t i = 0; i < fd.size(); ++i) worst = std::max(worst, std::abs(an.gradient[i] - fd[i]) / scale);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 30.0,
          "max relative error " + fmt("%.2e", worst) + " over 25 configs in " + fmt("%.2f", secs) + " s"};
}

Outcome oracle_equivalence() {
  const auto sys = standard_system();
  const auto data = generate(sys, 100, NoiseLevel{}, 0);
  PhysicsOracleClosure oracle(sys.c);
  const auto traj = integrate_model(ModelKind::ude, oracle, 10, data.clean.etas, data.observed.states.front());
  double dphi = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    dphi = std::max(dphi, std::abs(traj.states[i].phi - data.clean.states[i].phi));
  }
  const double loss = trajectory_loss(ModelKind::ude, oracle, 10, data, split_prefix(data, 1.0));
  return {dphi <= 1e-6 && loss <= 1e-10, "max |dphi| = " + fmt("%.2e", dphi) + ", loss = " + fmt("%.2e", loss)};
}

Outcome training(Runs& runs) {
  const auto& ude = runs.get(preset_config("table2"));
  const auto& node = runs.get(preset_config("table1"));
  const bool ok = ude.status == RunStatus::ok && node.status == RunStatus::ok && ude.final_loss <= 1e-5 &&
                  node.final_loss <= 1e-2;
  return {ok, "ude loss " + fmt("%.3e", ude.final_loss) + " (<= 1e-5), neural_ode loss " +
                  fmt("%.3e", node.final_loss) + " (<= 1e-2)"};
}

Outcome term_recovery(Runs& runs) {
  const auto& r = runs.get(preset_config("table2"));
  if (!r.recovered_term) return {false, "no recovered term"};
  double err = 0.0;
  for (const auto& s : *r.recovered_term) err = std::max(err, std::abs(s.approx - s.truth));
  return {err <= 0.05, "max |NN2 - truth| = " + fmt("%.3e", err)};
}

Outcome convergence(Runs& runs) {
  bool ok = true;
  std::string detail;
  for (const char* name : {"table2", "table12", "table18"}) {
    const auto cfg = preset_config(name);
    const auto& r = runs.get(cfg);
    const bool pass = r.status == RunStatus::ok && r.convergence && r.convergence->pass;
    ok = ok && pass;
    if (!detail.empty()) detail += ", ";
    detail += fmt("%.0f%%", cfg.fraction * 100) + " gap " + (r.convergence ? fmt("%.2e", r.convergence->gap) : "n/a");
  }
  return {ok, detail};
}

// Preset no-noise schedule for one training fraction.
RunConfig apply_cell(ModelKind kind, double fraction) {
  return preset_config(find_preset(kind, NoiseLabel::none, fraction)->name);
}

// Index of a fraction in the tested list; used for the one-step tolerance.
std::ptrdiff_t step_of(const std::vector<double>& fractions, std::optional<double> f) {
  if (!f) return static_cast<std::ptrdiff_t>(fractions.size());  // below the tested range
  const auto it = std::find(fractions.begin(), fractions.end(), *f);
  return it - fractions.begin();
}

Outcome breakdown_order(Runs& runs) {
  const std::vector<double> fractions = {0.9, 0.8, 0.4, 0.2, 0.1};
  const auto t0 = Clock::now();
  std::map<ModelKind, BreakdownResult> results;
  std::string rmses;
  for (auto kind : {ModelKind::neural_ode, ModelKind::ude}) {
    std::vector<FitReport> reports;
    rmses += std::string(rmses.empty() ? "" : "; ") + (kind == ModelKind::ude ? "ude" : "neural_ode") + " rmse";
    for (double f : fractions) {
      reports.push_back(runs.get(apply_cell(kind, f)));
      const auto& m = reports.back().metrics;
      rmses += " " + (m.forecast_phi_rmse ? fmt("%.3g", *m.forecast_phi_rmse) : std::string("nan"));
    }
    results[kind] = detect_breakdown(reports, kBreakdownThreshold);
  }
  const auto& node = results[ModelKind::neural_ode];
  const auto& ude = results[ModelKind::ude];
  const auto node_step = step_of(fractions, node.breakdown_fraction);
  const auto ude_step = step_of(fractions, ude.breakdown_fraction);
  const bool ordered = ude_step >= node_step;  // smaller fraction sits further down the list
  const bool node_near = std::abs(node_step - step_of(fractions, 0.4)) <= 1;
  const bool ude_near = std::abs(ude_step - step_of(fractions, 0.1)) <= 1;
  const auto show = [](const BreakdownResult& b) {
    return b.breakdown_fraction ? fmt("%.1f", *b.breakdown_fraction) + " (eta " + fmt("%.6f", *b.breakdown_eta) + ")"
                                : std::string("none");
  };
  const double secs = seconds_since(t0);
  return {ordered && node_near && ude_near && secs <= 7200.0,
          "neural_ode " + show(node) + ", ude " + show(ude) + "; ordering " + (ordered ? "ok" : "violated") +
              ", neural_ode within one step of 0.4: " + (node_near ? "yes" : "no") +
              ", ude within one step of 0.1: " + (ude_near ? "yes" : "no") + " [" + rmses + "]"};
}

Outcome noise_direction(Runs& runs) {
  bool ok = true;
  std::string detail;
  for (auto kind : {ModelKind::neural_ode, ModelKind::ude}) {
    std::vector<double> losses;
    for (auto noise : {NoiseLabel::none, NoiseLabel::moderate, NoiseLabel::high}) {
      const auto* p = find_preset(kind, noise, 1.0);
      losses.push_back(runs.get(preset_config(p->name)).final_loss);
    }
    const bool pass = losses[0] < losses[1] && losses[1] < losses[2];
    ok = ok && pass;
    if (!detail.empty()) detail += "; ";
    detail += std::string(kind == ModelKind::ude ? "ude " : "neural_ode ") + fmt("%.3e", losses[0]) + " < " +
              fmt("%.3e", losses[1]) + " < " + fmt("%.3e", losses[2]);
  }
  return {ok, detail};
}

Outcome determinism(Runs& runs) {
  const auto ude_a = runs.get(preset_config("table2")).final_loss;
  const auto node_a = runs.get(preset_config("table1")).final_loss;
  const auto ude_b = runs.fresh(preset_config("table2")).final_loss;
  const auto node_b = runs.fresh(preset_config("table1")).final_loss;
  const bool ok = ude_a == ude_b && node_a == node_b;
  return {ok, std::string("repeat runs ") + (ok ? "bit-identical" : "differ") + " (ude " + fmt("%.17g", ude_b) +
                  ", neural_ode " + fmt("%.17g", node_b) + ")"};
}

}  // namespace

int main() {
  Runs runs;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"domain end", domain_end},
      {"grid anchors", grid_anchors},
      {"gradient exactness", gradient_exactness},
      {"oracle equivalence", oracle_equivalence},
      {"training, no noise, full data", [&] { return training(runs); }},
      {"missing-term recovery", [&] { return term_recovery(runs); }},
      {"convergence to sqrt(C)", [&] { return convergence(runs); }},
      {"breakdown ordering", [&] { return breakdown_order(runs); }},
      {"noise robustness direction", [&] { return noise_direction(runs); }},
      {"determinism", [&] { return determinism(runs); }},
  };

  int passed = 0;
  std::vector<std::string> heads;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    passed += o.pass ? 1 : 0;
    char head[96];
    std::snprintf(head, sizeof head, "criterion %zu (%s): %s", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL");
    heads.emplace_back(head);
    std::printf("%s: %s\n", head, o.detail.c_str());
    std::fflush(stdout);
  }

  std::printf("\nsummary\n");
  for (const auto& h : heads) std::printf("%s\n", h.c_str());
  std::printf("criteria evaluated: %zu, passed: %d, failed: %zu\n", criteria.size(), passed,
              criteria.size() - static_cast<std::size_t>(passed));
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}

#include "dwarf/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dwarf {
namespace {

using nlohmann::json;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json num_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

double read_num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw std::invalid_argument("report: expected a number");
  return j.get<double>();
}

std::vector<double> read_num_array(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("report: expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(read_num(v));
  return out;
}

json trajectory_json(const Trajectory& t) {
  std::vector<double> phi;
  std::vector<double> dphi;
  for (const auto& s : t.states) {
    phi.push_back(s.phi);
    dphi.push_back(s.theta);
  }
  return {{"eta", num_array(t.etas)}, {"phi", num_array(phi)}, {"dphi", num_array(dphi)}};
}

Trajectory read_trajectory(const json& j) {
  Trajectory t;
  t.etas = read_num_array(j.at("eta"));
  const auto phi = read_num_array(j.at("phi"));
  const auto dphi = read_num_array(j.at("dphi"));
  if (phi.size() != t.etas.size() || dphi.size() != t.etas.size()) {
    throw std::invalid_argument("report: trajectory columns differ in length");
  }
  for (std::size_t i = 0; i < phi.size(); ++i) t.states.push_back({phi[i], dphi[i]});
  return t;
}

RunStatus parse_status(const std::string& s) {
  if (s == "ok") return RunStatus::ok;
  if (s == "diverged") return RunStatus::diverged;
  throw std::invalid_argument("report: unknown status '" + s + "'");
}

}  // namespace

std::string_view to_string(RunStatus s) noexcept { return s == RunStatus::ok ? "ok" : "diverged"; }

json report_to_json(const FitReport& r, const RunConfig& cfg, double wall_time_s) {
  json j;
  j["status"] = to_string(r.status);
  if (!r.error.empty()) j["error"] = r.error;
  j["kind"] = to_string(r.kind);
  j["noise"] = {{"label", to_string(r.noise.label)}, {"fraction", r.noise.fraction}};
  j["fraction"] = r.fraction;
  j["split"] = {{"train_count", r.split.train_count}, {"test_count", r.split.test_count}};
  j["system"] = {{"c", r.system.c}, {"eta0", r.system.eta0}, {"eta_inf", r.system.eta_inf}};
  j["initial_loss"] = num(r.initial_loss);
  j["adam_loss"] = num(r.adam_loss);
  j["final_loss"] = num(r.final_loss);
  j["train_mse"] = num(r.metrics.train_mse);
  j["train_phi_rmse"] = num(r.metrics.train_phi_rmse);
  if (r.metrics.forecast_mse) j["forecast_mse"] = num(*r.metrics.forecast_mse);
  if (r.metrics.forecast_phi_rmse) j["forecast_phi_rmse"] = num(*r.metrics.forecast_phi_rmse);
  if (r.convergence) j["convergence"] = {{"pass", r.convergence->pass}, {"gap", num(r.convergence->gap)}};
  if (!r.predicted.empty()) j["predicted"] = trajectory_json(r.predicted);
  if (r.recovered_term) {
    std::vector<double> eta;
    std::vector<double> approx;
    std::vector<double> truth;
    for (const auto& t : *r.recovered_term) {
      eta.push_back(t.eta);
      approx.push_back(t.approx);
      truth.push_back(t.truth);
    }
    j["recovered_term"] = {{"eta", num_array(eta)}, {"approx", num_array(approx)}, {"truth", num_array(truth)}};
  }
  if (r.nn1) j["nn1"] = num_array(*r.nn1);
  j["adam_history"] = num_array(r.adam_history);
  j["bfgs_history"] = num_array(r.bfgs_history);
  if (!r.bfgs_status.empty()) j["bfgs_status"] = r.bfgs_status;
  if (!r.params.empty()) j["params"] = num_array(r.params);
  j["config"] = to_json(cfg);
  j["wall_time_s"] = wall_time_s;
  return j;
}

FitReport report_from_json(const json& j) {
  try {
    FitReport r;
    r.status = parse_status(j.at("status").get<std::string>());
    if (j.contains("error")) r.error = j["error"].get<std::string>();
    r.kind = parse_model_kind(j.at("kind").get<std::string>());
    r.noise = NoiseLevel::parse(j.at("noise").at("label").get<std::string>());
    r.fraction = read_num(j.at("fraction"));
    r.split.train_count = j.at("split").at("train_count").get<std::size_t>();
    r.split.test_count = j.at("split").at("test_count").get<std::size_t>();
    const auto& s = j.at("system");
    r.system = SystemParams::make(read_num(s.at("c")), read_num(s.at("eta0")), read_num(s.at("eta_inf")));
    r.initial_loss = read_num(j.at("initial_loss"));
    r.adam_loss = read_num(j.at("adam_loss"));
    r.final_loss = read_num(j.at("final_loss"));
    r.metrics.train_mse = read_num(j.at("train_mse"));
    r.metrics.train_phi_rmse = read_num(j.at("train_phi_rmse"));
    if (j.contains("forecast_mse")) r.metrics.forecast_mse = read_num(j["forecast_mse"]);
    if (j.contains("forecast_phi_rmse")) r.metrics.forecast_phi_rmse = read_num(j["forecast_phi_rmse"]);
    if (j.contains("convergence")) {
      r.convergence = ConvergenceResult{j["convergence"].at("pass").get<bool>(), read_num(j["convergence"].at("gap"))};
    }
    if (j.contains("predicted")) r.predicted = read_trajectory(j["predicted"]);
    if (j.contains("recovered_term")) {
      const auto& t = j["recovered_term"];
      const auto eta = read_num_array(t.at("eta"));
      const auto approx = read_num_array(t.at("approx"));
      const auto truth = read_num_array(t.at("truth"));
      if (approx.size() != eta.size() || truth.size() != eta.size()) {
        throw std::invalid_argument("report: recovered_term columns differ in length");
      }
      std::vector<TermSample> samples;
      for (std::size_t i = 0; i < eta.size(); ++i) samples.push_back({eta[i], approx[i], truth[i]});
      r.recovered_term = std::move(samples);
    }
    if (j.contains("nn1")) r.nn1 = read_num_array(j["nn1"]);
    r.adam_history = read_num_array(j.at("adam_history"));
    r.bfgs_history = read_num_array(j.at("bfgs_history"));
    if (j.contains("bfgs_status")) r.bfgs_status = j["bfgs_status"].get<std::string>();
    if (j.contains("params")) r.params = read_num_array(j["params"]);
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("report: ") + e.what());
  }
}

json breakdown_to_json(const BreakdownResult& b) {
  json j;
  j["kind"] = to_string(b.kind);
  j["noise"] = to_string(b.noise.label);
  j["threshold"] = b.threshold;
  j["tested_fractions"] = b.tested_fractions;
  j["breakdown_fraction"] = b.breakdown_fraction ? json(*b.breakdown_fraction) : json(nullptr);
  j["breakdown_eta"] = b.breakdown_eta ? json(*b.breakdown_eta) : json(nullptr);
  return j;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("error writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string summary_csv(std::span<const FitReport> reports, double threshold) {
  std::ostringstream out;
  out << kSummaryHeader << '\n';
  const auto field = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("nan"); };
  for (const auto& r : reports) {
    out << to_string(r.kind) << ',' << to_string(r.noise.label) << ',' << format_double(r.fraction) << ','
        << field(r.final_loss) << ',' << field(r.metrics.train_mse) << ',';
    if (r.metrics.forecast_mse) out << field(*r.metrics.forecast_mse);
    out << ',';
    const bool failed = r.split.test_count > 0 &&
                        (r.status == RunStatus::diverged ||
                         (r.metrics.forecast_phi_rmse && !(*r.metrics.forecast_phi_rmse <= threshold)));
    if (failed) out << format_double(make_grid(r.system, r.split.size()).at(r.split.train_count - 1));
    out << '\n';
  }
  return out.str();
}

}  // namespace dwarf

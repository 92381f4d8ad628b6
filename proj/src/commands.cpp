#include "dwarf/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "dwarf/optimizers.hpp"
#include "dwarf/report.hpp"

namespace dwarf {
namespace {

namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void mark_failed(FitReport& r, const std::string& error) {
  r.status = RunStatus::diverged;
  r.error = error;
  r.metrics.train_mse = kNaN;
  r.metrics.train_phi_rmse = kNaN;
  if (r.split.test_count > 0) {
    r.metrics.forecast_mse = kNaN;
    r.metrics.forecast_phi_rmse = kNaN;
  }
}

std::string cell_name(const RunConfig& cfg) {
  std::ostringstream s;
  s << to_string(cfg.kind) << '_' << to_string(cfg.noise) << '_' << std::fixed << std::setprecision(2) << cfg.fraction;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace

Dataset make_dataset(const RunConfig& cfg) {
  return generate(cfg.system(), cfg.n_points, NoiseLevel::from_label(cfg.noise), cfg.data_seed);
}

RunConfig effective_config(const RunConfig& cfg, const Dataset& data) {
  RunConfig out = cfg;
  out.c = data.params.c;
  out.eta0 = data.params.eta0;
  out.eta_inf = data.params.eta_inf;
  out.n_points = data.size();
  out.noise = data.noise.label;
  out.data_seed = data.seed;
  return out;
}

FitReport run_fit(const RunConfig& cfg, const Dataset& data) {
  cfg.validate();
  const auto split = split_prefix(data, cfg.fraction);
  ModelConfig model;
  model.kind = cfg.kind;
  model.spec = cfg.mlp_spec();
  model.system = data.params;
  model.substeps = cfg.substeps;

  FitReport r;
  r.kind = cfg.kind;
  r.noise = data.noise;
  r.fraction = cfg.fraction;
  r.split = split;
  r.system = data.params;

  TrainResult trained;
  try {
    trained = train(model, data, split, cfg.schedule());
  } catch (const TrainingError& e) {
    r.initial_loss = r.adam_loss = r.final_loss = kNaN;
    mark_failed(r, e.what());
    return r;
  }
  model.params = trained.params;
  try {
    r = analyse_fit(model, data, split, cfg.fraction);
  } catch (const DivergedTrajectory& e) {
    mark_failed(r, std::string("forecast: ") + e.what());
  }
  r.initial_loss = trained.initial_loss;
  r.adam_loss = trained.adam_loss;
  r.final_loss = trained.final_loss;
  r.adam_history = trained.adam.history;
  r.bfgs_history = trained.bfgs.history;
  r.bfgs_status = std::string(to_string(trained.bfgs.status));
  if (cfg.include_params) r.params = trained.params;
  return r;
}

int cmd_generate(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto system = cfg.system();
  if (!cfg.eta_inf) log << "domain end eta_inf = " << format_double(system.eta_inf) << '\n';
  const auto data = generate(system, cfg.n_points, NoiseLevel::from_label(cfg.noise), cfg.data_seed);
  write_csv(data, out);
  log << "eta range [" << format_double(system.eta0) << ", " << format_double(system.eta_inf) << "], "
      << data.size() << " points, spacing " << format_double(data.clean.etas[1] - data.clean.etas[0]) << '\n'
      << "wrote " << out.string() << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const std::optional<fs::path>& data_path, const fs::path& report_out,
              std::ostream& log) {
  cfg.validate();
  const Dataset data = data_path ? read_csv(*data_path) : make_dataset(cfg);
  const RunConfig eff = effective_config(cfg, data);
  eff.validate();

  const auto t0 = std::chrono::steady_clock::now();
  const FitReport r = run_fit(eff, data);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(report_to_json(r, eff, wall), report_out);

  log << to_string(r.kind) << " noise=" << to_string(r.noise.label) << " fraction=" << format_double(r.fraction)
      << " status=" << to_string(r.status) << " final_loss=" << format_double(r.final_loss);
  if (r.metrics.forecast_phi_rmse) log << " forecast_phi_rmse=" << format_double(*r.metrics.forecast_phi_rmse);
  log << "\nwrote " << report_out.string() << '\n';
  if (r.status != RunStatus::ok) {
    log << "error: " << r.error << '\n';
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_sweep(const SweepConfig& sweep, const fs::path& out_dir, std::size_t jobs, std::ostream& log) {
  const auto cells = sweep.cells();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  // One dataset per noise level, shared read-only by every cell that uses it.
  std::map<NoiseLabel, Dataset> datasets;
  for (const auto& cell : cells) {
    if (!datasets.count(cell.noise)) datasets.emplace(cell.noise, make_dataset(cell));
  }

  std::vector<FitReport> reports(cells.size());
  std::vector<double> walls(cells.size(), 0.0);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& data = datasets.at(cells[i].noise);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        reports[i] = run_fit(cells[i], data);
      } catch (const std::exception& e) {
        FitReport r;
        r.kind = cells[i].kind;
        r.noise = data.noise;
        r.fraction = cells[i].fraction;
        r.split = split_prefix(data, cells[i].fraction);
        r.system = data.params;
        r.initial_loss = r.adam_loss = r.final_loss = kNaN;
        mark_failed(r, e.what());
        reports[i] = std::move(r);
      }
      walls[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, cells.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  std::size_t failures = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto eff = effective_config(cells[i], datasets.at(cells[i].noise));
    const auto path = out_dir / (cell_name(cells[i]) + ".json");
    write_json(report_to_json(reports[i], eff, walls[i]), path);
    const auto& r = reports[i];
    log << cell_name(cells[i]) << " status=" << to_string(r.status) << " final_loss=" << format_double(r.final_loss);
    if (r.metrics.forecast_phi_rmse) log << " forecast_phi_rmse=" << format_double(*r.metrics.forecast_phi_rmse);
    log << '\n';
    if (r.status != RunStatus::ok) ++failures;
  }
  write_text(out_dir / "summary.csv", summary_csv(reports, sweep.base.breakdown_threshold));
  log << cells.size() << " cells, " << failures << " failed; wrote " << (out_dir / "summary.csv").string() << '\n';
  return kExitOk;
}

int cmd_breakdown(const fs::path& report_dir, double threshold, const ReportFilter& filter,
                  const std::optional<fs::path>& out, std::ostream& log) {
  if (!(threshold > 0.0)) throw ConfigError("threshold must be positive");
  if (!fs::is_directory(report_dir)) throw IoError("not a directory: " + report_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(report_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::pair<ModelKind, NoiseLabel>, std::vector<FitReport>> groups;
  for (const auto& f : files) {
    const auto j = read_json(f);
    if (!j.is_object() || !j.contains("final_loss")) continue;  // not a fit report
    FitReport r;
    try {
      r = report_from_json(j);
    } catch (const std::invalid_argument& e) {
      throw IoError(f.string() + ": " + e.what());
    }
    if (filter.kind && r.kind != *filter.kind) continue;
    if (filter.noise && r.noise.label != *filter.noise) continue;
    groups[{r.kind, r.noise.label}].push_back(std::move(r));
  }
  if (groups.empty()) throw ConfigError("no matching reports in " + report_dir.string());
  if (groups.size() > 1) {
    throw ConfigError("reports span several (kind, noise) groups; select one with --model and --noise");
  }

  auto& reports = groups.begin()->second;
  std::sort(reports.begin(), reports.end(), [](const FitReport& a, const FitReport& b) { return a.fraction > b.fraction; });
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].fraction == reports[i - 1].fraction) {
      throw ConfigError("several reports share fraction " + format_double(reports[i].fraction));
    }
  }
  const auto result = detect_breakdown(reports, threshold);

  log << to_string(result.kind) << " noise=" << to_string(result.noise.label) << ": ";
  if (result.breakdown_fraction) {
    log << "breakdown at fraction " << format_double(*result.breakdown_fraction) << ", eta "
        << std::fixed << std::setprecision(6) << *result.breakdown_eta << '\n';
  } else {
    log << "no breakdown in tested range\n";
  }
  log.unsetf(std::ios::floatfield);
  const auto j = breakdown_to_json(result);
  if (out) {
    write_json(j, *out);
  } else {
    log << j.dump(2) << '\n';
  }
  return kExitOk;
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dwarf

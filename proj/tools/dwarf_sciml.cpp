// dwarf-sciml: generate datasets, train Neural ODE / UDE models, run sweeps
// and locate the forecasting breakdown point.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dwarf/commands.hpp"
#include "dwarf/run_config.hpp"

namespace {

using namespace dwarf;

// Values given on the command line; each one overrides the matching config field.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::optional<double> c;
  std::optional<double> eta0;
  std::optional<std::string> eta_inf;
  std::optional<std::size_t> n_points;
  std::optional<std::string> noise;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
  std::optional<std::string> activation;
  std::optional<std::vector<std::size_t>> hidden;
  std::optional<std::size_t> substeps;
  std::optional<double> adam_lr;
  std::optional<std::size_t> adam_epochs;
  std::optional<double> bfgs_step;
  std::optional<std::size_t> bfgs_epochs;
  std::optional<std::uint64_t> init_seed;
  std::optional<double> fraction;
  std::optional<double> threshold;
  bool include_params = false;
};

void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--preset", o.preset, "named preset (table1..table38 or caseN-node|ude-noise)");
  cmd->add_option("--c", o.c, "system parameter C");
  cmd->add_option("--eta0", o.eta0, "left end of the domain");
  cmd->add_option("--eta-inf", o.eta_inf, "right end of the domain, or 'auto'");
  cmd->add_option("--n-points", o.n_points, "grid size");
  cmd->add_option("--noise", o.noise, "none|moderate|high");
  cmd->add_option("--seed", o.seed, "dataset noise seed");
  cmd->add_option("--model", o.model, "neural_ode|ude");
  cmd->add_option("--activation", o.activation, "tanh|relu|sigmoid|rbf");
  cmd->add_option("--hidden", o.hidden, "hidden layer widths")->expected(1, -1);
  cmd->add_option("--substeps", o.substeps, "RK4 substeps per grid interval");
  cmd->add_option("--adam-lr", o.adam_lr, "Adam learning rate");
  cmd->add_option("--adam-epochs", o.adam_epochs, "Adam epochs");
  cmd->add_option("--bfgs-step", o.bfgs_step, "BFGS initial step length");
  cmd->add_option("--bfgs-epochs", o.bfgs_epochs, "BFGS iterations");
  cmd->add_option("--init-seed", o.init_seed, "network initialisation seed");
  cmd->add_option("--fraction", o.fraction, "training fraction in (0, 1]");
  cmd->add_option("--threshold", o.threshold, "forecast phi-RMSE breakdown threshold");
  cmd->add_flag("--include-params", o.include_params, "store trained parameters in reports");
}

nlohmann::json overrides_json(const Overrides& o, bool with_model_kind) {
  nlohmann::json j = nlohmann::json::object();
  if (o.c) j["system"]["c"] = *o.c;
  if (o.eta0) j["system"]["eta0"] = *o.eta0;
  if (o.eta_inf) {
    if (*o.eta_inf == "auto") {
      j["system"]["eta_inf"] = "auto";
    } else {
      try {
        j["system"]["eta_inf"] = std::stod(*o.eta_inf);
      } catch (const std::exception&) {
        throw ConfigError("--eta-inf: expected a number or 'auto'");
      }
    }
  }
  if (o.n_points) j["system"]["n_points"] = *o.n_points;
  if (o.noise) j["data"]["noise"] = *o.noise;
  if (o.seed) j["data"]["seed"] = *o.seed;
  if (o.model && with_model_kind) j["model"]["kind"] = *o.model;
  if (o.activation) j["model"]["activation"] = *o.activation;
  if (o.hidden) j["model"]["hidden_dims"] = *o.hidden;
  if (o.substeps) j["model"]["substeps"] = *o.substeps;
  if (o.adam_lr) j["schedule"]["adam_lr"] = *o.adam_lr;
  if (o.adam_epochs) j["schedule"]["adam_epochs"] = *o.adam_epochs;
  if (o.bfgs_step) j["schedule"]["bfgs_step"] = *o.bfgs_step;
  if (o.bfgs_epochs) j["schedule"]["bfgs_epochs"] = *o.bfgs_epochs;
  if (o.init_seed) j["schedule"]["init_seed"] = *o.init_seed;
  if (o.fraction) j["split"]["fraction"] = *o.fraction;
  if (o.threshold) j["analysis"]["breakdown_threshold"] = *o.threshold;
  if (o.include_params) j["output"]["include_params"] = true;
  return j;
}

// Base: --preset, else --config, else the headline config of --model (ude by default).
RunConfig resolve_config(const Overrides& o) {
  if (o.preset && o.config) throw ConfigError("--preset and --config are mutually exclusive");
  RunConfig base;
  if (o.preset) {
    base = preset_config(*o.preset);
  } else if (o.config) {
    base = load_config(*o.config);
  } else {
    base = default_config(o.model ? parse_model_kind(*o.model) : ModelKind::ude);
  }
  auto j = overrides_json(o, false);
  RunConfig cfg = config_from_json(j, base);
  if (o.model) cfg.kind = parse_model_kind(*o.model);
  cfg.validate();
  return cfg;
}

SweepConfig resolve_sweep(const Overrides& o) {
  if (o.preset) throw ConfigError("sweep does not take --preset");
  SweepConfig s = o.config ? load_sweep(*o.config) : SweepConfig{};
  s.base = config_from_json(overrides_json(o, false), s.base);
  if (o.model) s.kinds = {parse_model_kind(*o.model)};
  if (o.noise) s.noises = {NoiseLevel::parse(*o.noise).label};
  if (o.fraction) s.fractions = {*o.fraction};
  s.validate();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural ODE and UDE training for the Chandrasekhar white dwarf equation"};
  app.require_subcommand(1);

  Overrides gen_o;
  std::string gen_out = "dataset.csv";
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset CSV");
  add_config_options(gen, gen_o);
  gen->add_option("--out", gen_out, "output CSV path");

  Overrides train_o;
  std::optional<std::string> train_data;
  std::string train_out = "report.json";
  auto* trn = app.add_subcommand("train", "train one model and write a JSON report");
  add_config_options(trn, train_o);
  trn->add_option("--data", train_data, "dataset CSV (generated from the config when omitted)");
  trn->add_option("--out", train_out, "output report path");

  Overrides sweep_o;
  std::string sweep_out = "sweep";
  std::size_t jobs = 1;
  auto* swp = app.add_subcommand("sweep", "train every (kind, noise, fraction) cell");
  add_config_options(swp, sweep_o);
  swp->add_option("--out", sweep_out, "output directory");
  swp->add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);

  std::string bd_dir = "sweep";
  std::optional<std::string> bd_out;
  std::optional<std::string> bd_model;
  std::optional<std::string> bd_noise;
  double bd_threshold = kBreakdownThreshold;
  auto* bd = app.add_subcommand("breakdown", "locate the forecasting breakdown point in a report directory");
  bd->add_option("--data", bd_dir, "directory of fit reports");
  bd->add_option("--model", bd_model, "neural_ode|ude");
  bd->add_option("--noise", bd_noise, "none|moderate|high");
  bd->add_option("--threshold", bd_threshold, "forecast phi-RMSE breakdown threshold");
  bd->add_option("--out", bd_out, "output JSON path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  return run_guarded(
      [&]() -> int {
        if (*gen) return cmd_generate(resolve_config(gen_o), gen_out, std::cout);
        if (*trn) {
          std::optional<std::filesystem::path> data;
          if (train_data) data = *train_data;
          return cmd_train(resolve_config(train_o), data, train_out, std::cout);
        }
        if (*swp) return cmd_sweep(resolve_sweep(sweep_o), sweep_out, jobs, std::cout);
        ReportFilter filter;
        if (bd_model) filter.kind = parse_model_kind(*bd_model);
        if (bd_noise) filter.noise = NoiseLevel::parse(*bd_noise).label;
        std::optional<std::filesystem::path> out;
        if (bd_out) out = *bd_out;
        return cmd_breakdown(bd_dir, bd_threshold, filter, out, std::cout);
      },
      std::cerr);
}

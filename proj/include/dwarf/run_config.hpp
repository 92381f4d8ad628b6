#pragma once

// Run configuration shared by every CLI command: a single JSON document with
// the sections system, data, model, schedule, split, analysis and output,
// plus the named hyperparameter presets.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dwarf/analysis.hpp"
#include "dwarf/cwde.hpp"
#include "dwarf/dataset.hpp"
#include "dwarf/dynamics.hpp"
#include "dwarf/mlp.hpp"
#include "dwarf/optimizers.hpp"

namespace dwarf {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  // system
  double c = kDefaultC;
  double eta0 = kDefaultEta0;
  std::optional<double> eta_inf = kDefaultEtaInf;  // empty: locate with find_domain_end
  std::size_t n_points = 100;
  // data
  NoiseLabel noise = NoiseLabel::none;
  std::uint64_t data_seed = 0;
  // model
  ModelKind kind = ModelKind::ude;
  Activation activation = Activation::rbf;
  std::vector<std::size_t> hidden_dims = {15, 15};
  std::size_t substeps = kDefaultSubsteps;
  // schedule
  double adam_lr = 0.2;
  std::size_t adam_epochs = 300;
  double bfgs_step = 0.01;
  std::size_t bfgs_epochs = 1000;
  std::uint64_t init_seed = 0;
  // split
  double fraction = 1.0;
  // analysis
  double breakdown_threshold = kBreakdownThreshold;
  // output
  bool include_params = false;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  /// System parameters with eta_inf resolved (runs the domain search when unset).
  [[nodiscard]] SystemParams system() const;
  [[nodiscard]] MlpSpec mlp_spec() const;
  [[nodiscard]] TrainSchedule schedule() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Hyperparameters of one named training run.
struct Preset {
  std::string_view name;   // table<k>
  std::string_view alias;  // descriptive name, empty for the headline tables
  ModelKind kind;
  NoiseLabel noise;
  double fraction;
  double adam_lr;
  std::size_t adam_epochs;
  double bfgs_step;
  std::size_t bfgs_epochs;
  double reported_loss;
};

std::span<const Preset> all_presets();

/// Headline configuration of each model: table1 for neural_ode, table2 for ude.
RunConfig default_config(ModelKind kind);

/// Accepts a preset name or alias; throws ConfigError if unknown.
RunConfig preset_config(std::string_view name);

/// The preset for one (kind, noise, fraction) cell, if there is one.
const Preset* find_preset(ModelKind kind, NoiseLabel noise, double fraction);

nlohmann::json to_json(const RunConfig& cfg);

/// Overlays the fields present in j onto base. A top-level "preset" key
/// replaces base first; without it a "model.kind" different from base.kind
/// starts from default_config of that kind. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, const RunConfig& base = RunConfig{});

/// Reads and parses a config file. Throws IoError or ConfigError.
RunConfig load_config(const std::filesystem::path& path);

/// Grid of a sweep; every cell is one RunConfig.
struct SweepConfig {
  RunConfig base;
  std::vector<ModelKind> kinds = {ModelKind::neural_ode, ModelKind::ude};
  std::vector<NoiseLabel> noises = {NoiseLabel::none, NoiseLabel::moderate, NoiseLabel::high};
  std::vector<double> fractions = {std::begin(kDefaultFractions), std::end(kDefaultFractions)};
  /// Use the preset schedule and architecture of every cell; otherwise
  /// every cell shares base's schedule.
  bool preset_schedules = true;

  void validate() const;
  /// Cells ordered by kind, then noise, then descending fraction.
  [[nodiscard]] std::vector<RunConfig> cells() const;
};

/// Reads the optional "sweep" section {kinds, noises, fractions,
/// preset_schedules}; the remaining sections form the base config.
SweepConfig sweep_from_json(const nlohmann::json& j, const RunConfig& base = RunConfig{});
SweepConfig load_sweep(const std::filesystem::path& path);

}  // namespace dwarf

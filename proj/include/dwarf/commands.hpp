#pragma once

// The four CLI commands. Each returns a process exit code; run_guarded maps
// escaping exceptions onto the same codes.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>

#include "dwarf/analysis.hpp"
#include "dwarf/dataset.hpp"
#include "dwarf/run_config.hpp"

namespace dwarf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitIo = 4;

/// Synthetic dataset described by the system and data sections.
Dataset make_dataset(const RunConfig& cfg);

/// Trains and analyses one configuration. Training or forecast divergence is
/// recorded in the report (status, error) instead of thrown.
FitReport run_fit(const RunConfig& cfg, const Dataset& data);

/// The config as it applies to `data`: system and data fields are taken
/// from the dataset.
RunConfig effective_config(const RunConfig& cfg, const Dataset& data);

int cmd_generate(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Uses the dataset file when given, otherwise generates one from cfg.
int cmd_train(const RunConfig& cfg, const std::optional<std::filesystem::path>& data,
              const std::filesystem::path& report_out, std::ostream& log);

/// Writes one report per cell, named <kind>_<noise>_<fraction>.json, and
/// summary.csv into out_dir. Cells run on up to `jobs` threads.
int cmd_sweep(const SweepConfig& sweep, const std::filesystem::path& out_dir, std::size_t jobs, std::ostream& log);

struct ReportFilter {
  std::optional<ModelKind> kind;
  std::optional<NoiseLabel> noise;
};

/// Reads every *.json report in report_dir that matches the filter; they must
/// form a single (kind, noise) group. Writes the result to out when given.
int cmd_breakdown(const std::filesystem::path& report_dir, double threshold, const ReportFilter& filter,
                  const std::optional<std::filesystem::path>& out, std::ostream& log);

/// Runs body and converts ConfigError / std::invalid_argument to 2 and
/// IoError / ParseError to 4, printing the message to err.
int run_guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace dwarf

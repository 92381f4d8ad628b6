#pragma once

// JSON form of fit reports and breakdown results, and the sweep summary CSV.

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"

#include "dwarf/analysis.hpp"
#include "dwarf/run_config.hpp"

namespace dwarf {

std::string_view to_string(RunStatus s) noexcept;

/// Every FitReport field, the config echo and the wall time. Optional fields
/// are omitted when empty and non-finite numbers are written as null.
nlohmann::json report_to_json(const FitReport& r, const RunConfig& cfg, double wall_time_s);

/// Inverse of report_to_json for the FitReport part. Throws
/// std::invalid_argument on malformed input.
FitReport report_from_json(const nlohmann::json& j);

nlohmann::json breakdown_to_json(const BreakdownResult& b);

/// Serialised with a trailing newline and two-space indentation.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

inline constexpr std::string_view kSummaryHeader =
    "kind,noise,fraction,final_loss,train_mse,forecast_mse,breakdown_eta_candidate";

/// One row per report. breakdown_eta_candidate is the last training radius
/// of rows whose forecast fails the threshold, empty otherwise.
std::string summary_csv(std::span<const FitReport> reports, double threshold);

}  // namespace dwarf

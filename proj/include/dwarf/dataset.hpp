#pragma once

// Synthetic training data: equally spaced grid, proportional Gaussian noise,
// prefix train/test splits and the dataset CSV format.
//
// Noise draws come from std::mt19937_64 seeded with the dataset seed, fed
// through std::normal_distribution<double>; for every grid point phi is drawn
// before dphi.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dwarf/cwde.hpp"

namespace dwarf {

enum class NoiseLabel { none, moderate, high };

struct NoiseLevel {
  NoiseLabel label = NoiseLabel::none;
  double fraction = 0.0;

  static NoiseLevel from_label(NoiseLabel label) noexcept;
  /// Accepts "none", "moderate", "high"; throws std::invalid_argument otherwise.
  static NoiseLevel parse(std::string_view name);

  friend bool operator==(const NoiseLevel&, const NoiseLevel&) = default;
};

std::string_view to_string(NoiseLabel label) noexcept;

struct Dataset {
  Trajectory clean;
  Trajectory observed;
  NoiseLevel noise;
  std::uint64_t seed = 0;
  SystemParams params;

  [[nodiscard]] std::size_t size() const noexcept { return clean.size(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Split {
  std::size_t train_count = 0;
  std::size_t test_count = 0;

  [[nodiscard]] std::size_t size() const noexcept { return train_count + test_count; }

  friend bool operator==(const Split&, const Split&) = default;
};

/// Training fractions used throughout the experiments, largest first.
inline constexpr double kDefaultFractions[] = {1.0, 0.9, 0.8, 0.4, 0.2, 0.1};

/// n equally spaced radii on [eta0, eta_inf], endpoints exact.
std::vector<double> make_grid(const SystemParams& p, std::size_t n);

Dataset generate(const SystemParams& p, std::size_t n, NoiseLevel noise, std::uint64_t seed);

/// train_count = round-half-up(fraction * n); the leading points train.
Split split_prefix(std::size_t n, double fraction);
inline Split split_prefix(const Dataset& d, double fraction) { return split_prefix(d.size(), fraction); }

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kCsvHeader = "eta,phi_clean,dphi_clean,phi_obs,dphi_obs";

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Writes '#' metadata lines (system, noise, seed) followed by the fixed header.
void write_csv(const Dataset& d, const std::filesystem::path& path);
std::string to_csv(const Dataset& d);

/// Metadata lines are optional. Without them C and the noise level fall back
/// to the default value and the nearest label, and eta0/eta_inf come from the grid.
Dataset read_csv(const std::filesystem::path& path);
Dataset parse_csv(std::string_view text);

}  // namespace dwarf

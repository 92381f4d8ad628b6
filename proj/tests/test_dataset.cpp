#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "dwarf/dataset.hpp"

using namespace dwarf;
using Catch::Matchers::WithinAbs;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dwarf_test_" + name);
}

// Relative deviations observed/clean - 1 over every scalar.
std::vector<double> relative_noise(const Dataset& d) {
  std::vector<double> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.push_back(d.observed.states[i].phi / d.clean.states[i].phi - 1.0);
    out.push_back(d.observed.states[i].theta / d.clean.states[i].theta - 1.0);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("noise levels map labels to fractions", "[dataset]") {
  CHECK(NoiseLevel::from_label(NoiseLabel::none).fraction == 0.0);
  CHECK(NoiseLevel::from_label(NoiseLabel::moderate).fraction == 0.07);
  CHECK(NoiseLevel::from_label(NoiseLabel::high).fraction == 0.35);
  CHECK(NoiseLevel::parse("moderate").label == NoiseLabel::moderate);
  CHECK(to_string(NoiseLabel::high) == "high");
  CHECK_THROWS_AS(NoiseLevel::parse("loud"), std::invalid_argument);
}

TEST_CASE("make_grid endpoints and breakdown anchors", "[dataset]") {
  const auto grid = make_grid(standard_system(), 100);
  REQUIRE(grid.size() == 100);
  CHECK(grid.front() == 0.05);
  CHECK(grid.back() == 5.325);
  CHECK_THAT(grid[39], WithinAbs(2.128030, 1e-6));
  CHECK_THAT(grid[9], WithinAbs(0.529545, 1e-6));
}

TEST_CASE("make_grid spacing is constant", "[dataset]") {
  const auto grid = make_grid(standard_system(), 100);
  const double h = grid[1] - grid[0];
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK_THAT(grid[i] - grid[i - 1], WithinAbs(h, 1e-12));
  CHECK_THROWS_AS(make_grid(standard_system(), 1), std::invalid_argument);
}

TEST_CASE("generate without noise copies the clean data", "[dataset]") {
  const auto d = generate(standard_system(), 100, NoiseLevel::from_label(NoiseLabel::none), 42);
  CHECK(d.observed == d.clean);
  CHECK(d.clean.etas == make_grid(standard_system(), 100));
  CHECK(d.clean.states.front() == series_init(0.05, standard_system()));
}

TEST_CASE("generate is deterministic in the seed", "[dataset]") {
  const auto noise = NoiseLevel::from_label(NoiseLabel::moderate);
  const auto a = generate(standard_system(), 100, noise, 5);
  const auto b = generate(standard_system(), 100, noise, 5);
  const auto c = generate(standard_system(), 100, noise, 6);
  CHECK(a == b);
  CHECK(a.observed != c.observed);
  CHECK(a.clean == c.clean);
  CHECK(a.observed.etas == a.clean.etas);
}

TEST_CASE("moderate noise has a 7 percent relative spread", "[dataset]") {
  std::vector<double> all;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = generate(standard_system(), 100, NoiseLevel::from_label(NoiseLabel::moderate), seed);
    const auto r = relative_noise(d);
    all.insert(all.end(), r.begin(), r.end());
  }
  const double sd = sample_std(all);
  CHECK(sd >= 0.06);
  CHECK(sd <= 0.08);
}

TEST_CASE("noise is unbiased", "[dataset]") {
  for (auto label : {NoiseLabel::moderate, NoiseLabel::high}) {
    const auto level = NoiseLevel::from_label(label);
    std::vector<double> all;
    for (std::uint64_t seed = 100; seed < 160; ++seed) {
      const auto r = relative_noise(generate(standard_system(), 100, level, seed));
      all.insert(all.end(), r.begin(), r.end());
    }
    REQUIRE(all.size() >= 10000);
    CHECK(std::abs(mean(all)) <= 3.0 * level.fraction / std::sqrt(static_cast<double>(all.size())));
    CHECK_THAT(sample_std(all), WithinAbs(level.fraction, 0.1 * level.fraction));
  }
}

TEST_CASE("split_prefix rounds fractions of the standard grid", "[dataset]") {
  CHECK(split_prefix(100, 1.0) == Split{100, 0});
  CHECK(split_prefix(100, 0.9) == Split{90, 10});
  CHECK(split_prefix(100, 0.8) == Split{80, 20});
  CHECK(split_prefix(100, 0.4) == Split{40, 60});
  CHECK(split_prefix(100, 0.2) == Split{20, 80});
  CHECK(split_prefix(100, 0.1) == Split{10, 90});
  CHECK(split_prefix(10, 0.25) == Split{3, 7});  // 2.5 rounds up

  const auto grid = make_grid(standard_system(), 100);
  CHECK_THAT(grid[split_prefix(100, 0.1).train_count - 1], WithinAbs(0.529545, 1e-6));
  CHECK_THAT(grid[split_prefix(100, 0.4).train_count - 1], WithinAbs(2.128030, 1e-6));
}

TEST_CASE("split_prefix rejects splits without two training points", "[dataset]") {
  CHECK_THROWS_AS(split_prefix(100, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(split_prefix(100, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(split_prefix(100, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(split_prefix(1, 1.0), std::invalid_argument);
}

TEST_CASE("format_double round-trips", "[dataset]") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 5.325, 0.9995895676821935}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("CSV round-trip is exact", "[dataset]") {
  for (auto label : {NoiseLabel::none, NoiseLabel::moderate, NoiseLabel::high}) {
    const auto d = generate(standard_system(), 100, NoiseLevel::from_label(label), 11);
    const auto text = to_csv(d);
    const auto back = parse_csv(text);
    CHECK(back == d);
    CHECK(to_csv(back) == text);
  }
}

TEST_CASE("CSV files round-trip through disk", "[dataset]") {
  const auto d = generate(SystemParams::make(0.04, 0.1, 3.0), 37, NoiseLevel::from_label(NoiseLabel::high), 3);
  const auto path = temp_path("roundtrip.csv");
  write_csv(d, path);
  CHECK(read_csv(path) == d);
  std::filesystem::remove(path);
}

TEST_CASE("CSV header is fixed", "[dataset]") {
  const auto text = to_csv(generate(standard_system(), 5, NoiseLevel{}, 0));
  CHECK(text.find(std::string(kCsvHeader) + "\n") != std::string::npos);
}

TEST_CASE("CSV without metadata falls back to defaults", "[dataset]") {
  const std::string text =
      "eta,phi_clean,dphi_clean,phi_obs,dphi_obs\n"
      "0.05,1,0,1,0\n"
      "1,0.9,-0.1,0.9,-0.1\n"
      "2,0.5,-0.3,0.5,-0.3\n";
  const auto d = parse_csv(text);
  CHECK(d.size() == 3);
  CHECK(d.params.c == kDefaultC);
  CHECK(d.params.eta0 == 0.05);
  CHECK(d.params.eta_inf == 2.0);
  CHECK(d.noise.label == NoiseLabel::none);
}

TEST_CASE("CSV parse errors carry line numbers", "[dataset]") {
  const std::string header = "eta,phi_clean,dphi_clean,phi_obs,dphi_obs\n";
  const auto line_of = [](const std::string& text) -> std::size_t {
    try {
      (void)parse_csv(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("eta,phi\n0.05,1\n") == 1);
  CHECK(line_of(header + "0.05,1,0,1,0\n1.0,0.9,-0.1,0.9,-0.1\n0.5,0.8,-0.2,0.8,-0.2\n") == 4);
  CHECK(line_of(header + "0.05,1,0,1,0\n1.0,abc,-0.1,0.9,-0.1\n") == 3);
  CHECK(line_of(header + "0.05,1,0,1,0\n1.0,0.9,-0.1,0.9\n") == 3);
  CHECK(line_of(header + "0.05,1,0,1,0\n1.0,nan,-0.1,0.9,-0.1\n") == 3);
  CHECK(line_of(header + "0.05,1,0,1,0\n") != 0);
  CHECK_THROWS_AS(parse_csv(""), ParseError);
}

TEST_CASE("read_csv reports missing files", "[dataset]") {
  CHECK_THROWS_AS(read_csv(temp_path("does_not_exist.csv")), IoError);
}

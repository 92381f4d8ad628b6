#include "dwarf/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <system_error>

namespace dwarf {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t line) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(line, "invalid number '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError(line, "non-finite value '" + std::string(field) + "'");
  }
  return v;
}

// Noise label whose fraction is closest to the sample std of observed/clean - 1.
NoiseLevel estimate_noise(const Trajectory& clean, const Trajectory& observed) {
  if (clean == observed) return NoiseLevel::from_label(NoiseLabel::none);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const std::array<std::pair<double, double>, 2> pairs = {
        std::pair{clean.states[i].phi, observed.states[i].phi},
        std::pair{clean.states[i].theta, observed.states[i].theta}};
    for (const auto& [c, o] : pairs) {
      if (c == 0.0) continue;
      const double r = o / c - 1.0;
      sum += r;
      sum_sq += r * r;
      ++count;
    }
  }
  const double mean = count ? sum / static_cast<double>(count) : 0.0;
  const double sd = count > 1 ? std::sqrt((sum_sq - count * mean * mean) / static_cast<double>(count - 1)) : 0.0;
  NoiseLevel best = NoiseLevel::from_label(NoiseLabel::moderate);
  if (std::abs(sd - 0.35) < std::abs(sd - 0.07)) best = NoiseLevel::from_label(NoiseLabel::high);
  return best;
}

}  // namespace

NoiseLevel NoiseLevel::from_label(NoiseLabel label) noexcept {
  switch (label) {
    case NoiseLabel::moderate: return {label, 0.07};
    case NoiseLabel::high: return {label, 0.35};
    case NoiseLabel::none: break;
  }
  return {NoiseLabel::none, 0.0};
}

NoiseLevel NoiseLevel::parse(std::string_view name) {
  if (name == "none") return from_label(NoiseLabel::none);
  if (name == "moderate") return from_label(NoiseLabel::moderate);
  if (name == "high") return from_label(NoiseLabel::high);
  throw std::invalid_argument("unknown noise level '" + std::string(name) + "' (expected none|moderate|high)");
}

std::string_view to_string(NoiseLabel label) noexcept {
  switch (label) {
    case NoiseLabel::moderate: return "moderate";
    case NoiseLabel::high: return "high";
    case NoiseLabel::none: break;
  }
  return "none";
}

std::vector<double> make_grid(const SystemParams& p, std::size_t n) {
  if (n < 2) throw std::invalid_argument("make_grid: need at least 2 points");
  std::vector<double> grid(n);
  const double step = (p.eta_inf - p.eta0) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    grid[k] = p.eta0 + static_cast<double>(k) * step;
  }
  grid.back() = p.eta_inf;
  return grid;
}

Dataset generate(const SystemParams& p, std::size_t n, NoiseLevel noise, std::uint64_t seed) {
  Dataset d;
  d.params = p;
  d.noise = noise;
  d.seed = seed;
  const auto grid = make_grid(p, n);
  d.clean = solve_reference(p, grid);
  d.observed = d.clean;
  if (noise.fraction == 0.0) return d;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& s : d.observed.states) {
    s.phi *= 1.0 + noise.fraction * gauss(rng);
    s.theta *= 1.0 + noise.fraction * gauss(rng);
  }
  return d;
}

Split split_prefix(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("split_prefix: fraction must lie in (0, 1]");
  }
  const auto train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
  if (train < 2) throw std::invalid_argument("split_prefix: fewer than 2 training points");
  return {std::min(train, n), n - std::min(train, n)};
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string to_csv(const Dataset& d) {
  std::string out;
  out += "# c=" + format_double(d.params.c) + "\n";
  out += "# eta0=" + format_double(d.params.eta0) + "\n";
  out += "# eta_inf=" + format_double(d.params.eta_inf) + "\n";
  out += "# noise=" + std::string(to_string(d.noise.label)) + "\n";
  out += "# seed=" + std::to_string(d.seed) + "\n";
  out += kCsvHeader;
  out += '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    const State& c = d.clean.states[i];
    const State& o = d.observed.states[i];
    out += format_double(d.clean.etas[i]) + ',' + format_double(c.phi) + ',' + format_double(c.theta) + ',' +
           format_double(o.phi) + ',' + format_double(o.theta) + '\n';
  }
  return out;
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << to_csv(d);
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

Dataset parse_csv(std::string_view text) {
  std::map<std::string, std::string, std::less<>> meta;
  Dataset d;
  bool header_seen = false;
  std::size_t line_no = 0;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '#') {
      if (header_seen) throw ParseError(line_no, "metadata after header");
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) {
        meta[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
      }
      continue;
    }
    if (!header_seen) {
      if (line != kCsvHeader) {
        throw ParseError(line_no, "expected header '" + std::string(kCsvHeader) + "'");
      }
      header_seen = true;
      continue;
    }

    std::array<double, 5> v{};
    std::size_t field = 0;
    while (true) {
      const auto comma = line.find(',');
      if (field >= v.size()) throw ParseError(line_no, "too many fields");
      v[field++] = parse_number(line.substr(0, comma), line_no);
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (field != v.size()) throw ParseError(line_no, "expected 5 fields");
    if (!d.clean.etas.empty() && !(v[0] > d.clean.etas.back())) {
      throw ParseError(line_no, "eta values must be strictly increasing");
    }
    d.clean.etas.push_back(v[0]);
    d.clean.states.push_back({v[1], v[2]});
    d.observed.etas.push_back(v[0]);
    d.observed.states.push_back({v[3], v[4]});
  }

  if (!header_seen) throw ParseError(line_no, "missing header");
  if (d.size() < 2) throw ParseError(line_no, "need at least 2 data rows");

  const auto meta_number = [&](std::string_view key, double fallback) {
    const auto it = meta.find(key);
    return it == meta.end() ? fallback : parse_number(it->second, 0);
  };
  try {
    d.params = SystemParams::make(meta_number("c", kDefaultC), meta_number("eta0", d.clean.etas.front()),
                                  meta_number("eta_inf", d.clean.etas.back()));
    if (const auto it = meta.find("noise"); it != meta.end()) {
      d.noise = NoiseLevel::parse(it->second);
    } else {
      d.noise = estimate_noise(d.clean, d.observed);
    }
    if (const auto it = meta.find("seed"); it != meta.end()) {
      d.seed = std::stoull(it->second);
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(0, std::string("metadata: ") + e.what());
  }
  return d;
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace dwarf

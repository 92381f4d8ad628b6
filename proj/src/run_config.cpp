#include "dwarf/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dwarf {
namespace {

using nlohmann::json;
using NL = NoiseLabel;
using MK = ModelKind;

constexpr Preset kPresets[] = {
    {"table1", "", MK::neural_ode, NL::none, 1.0, 0.1, 80, 0.01, 100, 4.1138406539108517e-4},
    {"table2", "", MK::ude, NL::none, 1.0, 0.2, 300, 0.01, 1000, 7.428771812835665e-8},
    {"table3", "case1-node-none", MK::neural_ode, NL::none, 1.0, 0.1, 80, 0.01, 100, 4.1138406539108517e-4},
    {"table4", "case1-node-moderate", MK::neural_ode, NL::moderate, 1.0, 0.1, 80, 0.01, 100, 0.18869879897796932},
    {"table5", "case1-node-high", MK::neural_ode, NL::high, 1.0, 0.1, 80, 0.01, 100, 4.6548399612492695},
    {"table6", "case1-ude-none", MK::ude, NL::none, 1.0, 0.2, 300, 0.01, 1000, 7.428771812835665e-8},
    {"table7", "case1-ude-moderate", MK::ude, NL::moderate, 1.0, 0.1, 80, 0.01, 100, 0.18700614018769082},
    {"table8", "case1-ude-high", MK::ude, NL::high, 1.0, 0.2, 300, 0.006, 1000, 3.8823314291961464},
    {"table9", "case2-node-none", MK::neural_ode, NL::none, 0.9, 0.1, 80, 0.01, 100, 0.0001677152395830407},
    {"table10", "case2-node-moderate", MK::neural_ode, NL::moderate, 0.9, 0.1, 80, 0.01, 100, 0.1922287896870521},
    {"table11", "case2-node-high", MK::neural_ode, NL::high, 0.9, 0.1, 80, 0.01, 100, 4.586295624390106},
    {"table12", "case2-ude-none", MK::ude, NL::none, 0.9, 0.2, 300, 0.01, 1000, 4.0559441192350175e-8},
    {"table13", "case2-ude-moderate", MK::ude, NL::moderate, 0.9, 0.2, 300, 0.01, 1000, 0.12849386036518934},
    {"table14", "case2-ude-high", MK::ude, NL::high, 0.9, 0.2, 300, 0.01, 1100, 4.492739863250299},
    {"table15", "case3-node-none", MK::neural_ode, NL::none, 0.8, 0.1, 80, 0.01, 150, 0.0001824757201885788},
    {"table16", "case3-node-moderate", MK::neural_ode, NL::moderate, 0.8, 0.1, 80, 0.01, 100, 0.1814619148898155},
    {"table17", "case3-node-high", MK::neural_ode, NL::high, 0.8, 0.1, 80, 0.01, 150, 4.5409431043449215},
    {"table18", "case3-ude-none", MK::ude, NL::none, 0.8, 0.2, 300, 0.01, 1000, 6.847620824165587e-9},
    {"table19", "case3-ude-moderate", MK::ude, NL::moderate, 0.8, 0.2, 300, 0.01, 1300, 0.18109657827904974},
    {"table20", "case3-ude-high", MK::ude, NL::high, 0.8, 0.2, 300, 0.01, 1100, 3.8463672585184607},
    {"table21", "case4-node-none", MK::neural_ode, NL::none, 0.4, 0.02, 150, 0.01, 150, 7.08585918958102e-5},
    {"table22", "case4-node-moderate", MK::neural_ode, NL::moderate, 0.4, 0.05, 150, 0.01, 300, 0.1168780828919965},
    {"table23", "case4-node-high", MK::neural_ode, NL::high, 0.4, 0.2, 150, 0.01, 300, 4.390035815184278},
    {"table24", "case4-ude-none", MK::ude, NL::none, 0.4, 0.1, 300, 0.01, 1000, 3.49521204857231e-10},
    {"table25", "case4-ude-moderate", MK::ude, NL::moderate, 0.4, 0.1, 300, 0.01, 1500, 0.14576123983603648},
    {"table26", "case4-ude-high", MK::ude, NL::high, 0.4, 0.2, 300, 0.1, 200, 3.9559738408639467},
    {"table27", "case5-node-none", MK::neural_ode, NL::none, 0.2, 0.02, 150, 0.005, 125, 6.746089720256949e-5},
    {"table28", "case5-node-moderate", MK::neural_ode, NL::moderate, 0.2, 0.05, 150, 0.01, 100, 0.09189581738612586},
    {"table29", "case5-node-high", MK::neural_ode, NL::high, 0.2, 0.1, 100, 0.001, 100, 1.4654916015179802},
    {"table30", "case5-ude-none", MK::ude, NL::none, 0.2, 0.2, 300, 0.01, 1000, 5.292079273035613e-13},
    {"table31", "case5-ude-moderate", MK::ude, NL::moderate, 0.2, 0.2, 300, 0.001, 1500, 0.08989768088342631},
    {"table32", "case5-ude-high", MK::ude, NL::high, 0.2, 0.2, 300, 0.01, 1100, 2.1492276515023296},
    {"table33", "case6-node-none", MK::neural_ode, NL::none, 0.1, 0.02, 150, 0.005, 125, 1.3532552145569704e-5},
    {"table34", "case6-node-moderate", MK::neural_ode, NL::moderate, 0.1, 0.05, 150, 0.01, 100, 0.03149419050408648},
    {"table35", "case6-node-high", MK::neural_ode, NL::high, 0.1, 0.1, 100, 0.001, 100, 1.035568626897076},
    {"table36", "case6-ude-none", MK::ude, NL::none, 0.1, 0.2, 300, 0.01, 1000, 2.7694999610436222e-11},
    {"table37", "case6-ude-moderate", MK::ude, NL::moderate, 0.1, 0.2, 300, 0.001, 1500, 0.017887304919527783},
    {"table38", "case6-ude-high", MK::ude, NL::high, 0.1, 0.2, 300, 0.01, 200, 0.20057570378189338},
};

RunConfig apply_preset(const Preset& p) {
  RunConfig cfg;
  cfg.kind = p.kind;
  if (p.kind == MK::neural_ode) {
    cfg.activation = Activation::tanh;
    cfg.hidden_dims = {160};
  } else {
    cfg.activation = Activation::rbf;
    cfg.hidden_dims = {15, 15};
  }
  cfg.noise = p.noise;
  cfg.fraction = p.fraction;
  cfg.adam_lr = p.adam_lr;
  cfg.adam_epochs = p.adam_epochs;
  cfg.bfgs_step = p.bfgs_step;
  cfg.bfgs_epochs = p.bfgs_epochs;
  return cfg;
}

// Every object is checked against its allowed keys so that typos fail loudly.
void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get(const json& obj, const char* key, std::string_view where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + ": wrong type");
  }
}

double get_number(const json& obj, const char* key, std::string_view where) {
  if (!obj.at(key).is_number()) throw ConfigError(std::string(where) + "." + key + ": expected a number");
  return obj.at(key).get<double>();
}

std::uint64_t get_count(const json& obj, const char* key, std::string_view where) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    throw ConfigError(std::string(where) + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, std::string_view where) {
  if (!v.is_string()) throw ConfigError(std::string(where) + ": expected strings");
  return v.get<std::string>();
}

template <typename F>
auto rethrow_as_config(F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("system.c must lie in (0, 1)");
  if (!(eta0 > 0.0)) throw ConfigError("system.eta0 must be positive");
  if (eta_inf && !(*eta_inf > eta0)) throw ConfigError("system.eta_inf must exceed eta0");
  if (n_points < 2) throw ConfigError("system.n_points must be >= 2");
  if (hidden_dims.empty()) throw ConfigError("model.hidden_dims must not be empty");
  for (auto h : hidden_dims) {
    if (h == 0) throw ConfigError("model.hidden_dims entries must be >= 1");
  }
  if (substeps == 0) throw ConfigError("model.substeps must be >= 1");
  if (!(adam_lr > 0.0) || !std::isfinite(adam_lr)) throw ConfigError("schedule.adam_lr must be positive");
  if (!(bfgs_step > 0.0) || !std::isfinite(bfgs_step)) throw ConfigError("schedule.bfgs_step must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("split.fraction must lie in (0, 1]");
  rethrow_as_config([&] { return split_prefix(n_points, fraction); });
  if (!(breakdown_threshold > 0.0)) throw ConfigError("analysis.breakdown_threshold must be positive");
}

SystemParams RunConfig::system() const {
  validate();
  if (eta_inf) return rethrow_as_config([&] { return SystemParams::make(c, eta0, *eta_inf); });
  const auto probe = rethrow_as_config([&] { return SystemParams::make(c, eta0, eta0 + 1.0); });
  return rethrow_as_config([&] { return SystemParams::make(c, eta0, find_domain_end(probe)); });
}

MlpSpec RunConfig::mlp_spec() const { return MlpSpec{2, hidden_dims, 2, activation}; }

TrainSchedule RunConfig::schedule() const {
  TrainSchedule s;
  s.adam.lr = adam_lr;
  s.adam.epochs = adam_epochs;
  s.bfgs.init_step = bfgs_step;
  s.bfgs.epochs = bfgs_epochs;
  s.seed = init_seed;
  return s;
}

std::span<const Preset> all_presets() { return kPresets; }

RunConfig default_config(ModelKind kind) { return apply_preset(kPresets[kind == MK::neural_ode ? 0 : 1]); }

RunConfig preset_config(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name || (!p.alias.empty() && p.alias == name)) return apply_preset(p);
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

const Preset* find_preset(ModelKind kind, NoiseLabel noise, double fraction) {
  for (std::size_t i = 2; i < std::size(kPresets); ++i) {
    const auto& p = kPresets[i];
    if (p.kind == kind && p.noise == noise && std::abs(p.fraction - fraction) < 1e-12) return &p;
  }
  return nullptr;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["system"] = {{"c", cfg.c}, {"eta0", cfg.eta0}, {"n_points", cfg.n_points}};
  j["system"]["eta_inf"] = cfg.eta_inf ? json(*cfg.eta_inf) : json("auto");
  j["data"] = {{"noise", to_string(cfg.noise)}, {"seed", cfg.data_seed}};
  j["model"] = {{"kind", to_string(cfg.kind)},
                {"activation", to_string(cfg.activation)},
                {"hidden_dims", cfg.hidden_dims},
                {"substeps", cfg.substeps}};
  j["schedule"] = {{"adam_lr", cfg.adam_lr},
                   {"adam_epochs", cfg.adam_epochs},
                   {"bfgs_step", cfg.bfgs_step},
                   {"bfgs_epochs", cfg.bfgs_epochs},
                   {"init_seed", cfg.init_seed}};
  j["split"] = {{"fraction", cfg.fraction}};
  j["analysis"] = {{"breakdown_threshold", cfg.breakdown_threshold}};
  j["output"] = {{"include_params", cfg.include_params}};
  return j;
}

RunConfig config_from_json(const json& j, const RunConfig& base) {
  check_keys(j, "config", {"preset", "system", "data", "model", "schedule", "split", "analysis", "output", "sweep"});
  RunConfig cfg = base;
  if (j.contains("preset")) cfg = preset_config(get<std::string>(j, "preset", "config"));

  if (j.contains("model")) {
    const auto& m = j["model"];
    check_keys(m, "model", {"kind", "activation", "hidden_dims", "substeps"});
    if (m.contains("kind")) {
      const auto kind = rethrow_as_config([&] { return parse_model_kind(get<std::string>(m, "kind", "model")); });
      if (kind != cfg.kind && !j.contains("preset")) cfg = default_config(kind);
      cfg.kind = kind;
    }
    if (m.contains("activation")) {
      cfg.activation = rethrow_as_config([&] { return parse_activation(get<std::string>(m, "activation", "model")); });
    }
    if (m.contains("hidden_dims")) {
      if (!m["hidden_dims"].is_array()) throw ConfigError("model.hidden_dims: expected an array");
      cfg.hidden_dims.clear();
      for (const auto& v : m["hidden_dims"]) {
        if (!v.is_number_unsigned()) throw ConfigError("model.hidden_dims: expected positive integers");
        cfg.hidden_dims.push_back(v.get<std::size_t>());
      }
    }
    if (m.contains("substeps")) cfg.substeps = get_count(m, "substeps", "model");
  }
  if (j.contains("system")) {
    const auto& s = j["system"];
    check_keys(s, "system", {"c", "eta0", "eta_inf", "n_points"});
    if (s.contains("c")) cfg.c = get_number(s, "c", "system");
    if (s.contains("eta0")) cfg.eta0 = get_number(s, "eta0", "system");
    if (s.contains("eta_inf")) {
      if (s["eta_inf"].is_string()) {
        if (s["eta_inf"] != "auto") throw ConfigError("system.eta_inf: expected a number or \"auto\"");
        cfg.eta_inf.reset();
      } else {
        cfg.eta_inf = get_number(s, "eta_inf", "system");
      }
    }
    if (s.contains("n_points")) cfg.n_points = get_count(s, "n_points", "system");
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    check_keys(d, "data", {"noise", "seed"});
    if (d.contains("noise")) {
      cfg.noise = rethrow_as_config([&] { return NoiseLevel::parse(get<std::string>(d, "noise", "data")).label; });
    }
    if (d.contains("seed")) cfg.data_seed = get_count(d, "seed", "data");
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    check_keys(s, "schedule", {"adam_lr", "adam_epochs", "bfgs_step", "bfgs_epochs", "init_seed"});
    if (s.contains("adam_lr")) cfg.adam_lr = get_number(s, "adam_lr", "schedule");
    if (s.contains("adam_epochs")) cfg.adam_epochs = get_count(s, "adam_epochs", "schedule");
    if (s.contains("bfgs_step")) cfg.bfgs_step = get_number(s, "bfgs_step", "schedule");
    if (s.contains("bfgs_epochs")) cfg.bfgs_epochs = get_count(s, "bfgs_epochs", "schedule");
    if (s.contains("init_seed")) cfg.init_seed = get_count(s, "init_seed", "schedule");
  }
  if (j.contains("split")) {
    check_keys(j["split"], "split", {"fraction"});
    if (j["split"].contains("fraction")) cfg.fraction = get_number(j["split"], "fraction", "split");
  }
  if (j.contains("analysis")) {
    check_keys(j["analysis"], "analysis", {"breakdown_threshold"});
    if (j["analysis"].contains("breakdown_threshold")) {
      cfg.breakdown_threshold = get_number(j["analysis"], "breakdown_threshold", "analysis");
    }
  }
  if (j.contains("output")) {
    check_keys(j["output"], "output", {"include_params"});
    if (j["output"].contains("include_params")) {
      cfg.include_params = get<bool>(j["output"], "include_params", "output");
    }
  }
  cfg.validate();
  return cfg;
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json_file(path)); }

void SweepConfig::validate() const {
  base.validate();
  if (kinds.empty() || noises.empty() || fractions.empty()) throw ConfigError("sweep: empty axis");
  const auto unique = [](const auto& v) { return std::set(v.begin(), v.end()).size() == v.size(); };
  if (!unique(kinds) || !unique(noises) || !unique(fractions)) throw ConfigError("sweep: duplicate axis values");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sweep: fractions must lie in (0, 1]");
    rethrow_as_config([&] { return split_prefix(base.n_points, f); });
  }
}

std::vector<RunConfig> SweepConfig::cells() const {
  validate();
  auto sorted = fractions;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::vector<RunConfig> out;
  for (auto kind : kinds) {
    for (auto noise : noises) {
      for (double f : sorted) {
        RunConfig cell = base;
        if (preset_schedules) {
          const auto* p = find_preset(kind, noise, f);
          cell = p ? apply_preset(*p) : default_config(kind);
          cell.c = base.c;
          cell.eta0 = base.eta0;
          cell.eta_inf = base.eta_inf;
          cell.n_points = base.n_points;
          cell.data_seed = base.data_seed;
          cell.substeps = base.substeps;
          cell.init_seed = base.init_seed;
          cell.breakdown_threshold = base.breakdown_threshold;
          cell.include_params = base.include_params;
        } else if (kind != base.kind) {
          const auto def = default_config(kind);
          cell.activation = def.activation;
          cell.hidden_dims = def.hidden_dims;
        }
        cell.kind = kind;
        cell.noise = noise;
        cell.fraction = f;
        out.push_back(cell);
      }
    }
  }
  return out;
}

SweepConfig sweep_from_json(const json& j, const RunConfig& base) {
  SweepConfig s;
  s.base = config_from_json(j, base);
  if (j.contains("sweep")) {
    const auto& w = j["sweep"];
    check_keys(w, "sweep", {"kinds", "noises", "fractions", "preset_schedules"});
    for (const char* axis : {"kinds", "noises", "fractions"}) {
      if (w.contains(axis) && !w[axis].is_array()) throw ConfigError(std::string("sweep.") + axis + ": expected an array");
    }
    if (w.contains("kinds")) {
      s.kinds.clear();
      for (const auto& v : w["kinds"]) {
        s.kinds.push_back(rethrow_as_config([&] { return parse_model_kind(as_string(v, "sweep.kinds")); }));
      }
    }
    if (w.contains("noises")) {
      s.noises.clear();
      for (const auto& v : w["noises"]) {
        s.noises.push_back(rethrow_as_config([&] { return NoiseLevel::parse(as_string(v, "sweep.noises")).label; }));
      }
    }
    if (w.contains("fractions")) {
      s.fractions.clear();
      for (const auto& v : w["fractions"]) {
        if (!v.is_number()) throw ConfigError("sweep.fractions: expected numbers");
        s.fractions.push_back(v.get<double>());
      }
    }
    if (w.contains("preset_schedules")) s.preset_schedules = get<bool>(w, "preset_schedules", "sweep");
  }
  s.validate();
  return s;
}

SweepConfig load_sweep(const std::filesystem::path& path) { return sweep_from_json(read_json_file(path)); }

}  // namespace dwarf

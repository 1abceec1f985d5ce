#pragma once

// Experiment configuration (INI-style text with section headers) and the
// hyperparameter sweep presets.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hems/dataio.hpp"
#include "hems/domain.hpp"

namespace hems::config {

/// Ordered parameter name -> candidate values.
using SweepGrid = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct ExperimentConfig {
  std::filesystem::path data;  // household directory
  std::string tariff = "table";
  TrainConfig train;
  SweepGrid sweep;
  std::filesystem::path out = "out";
  std::uint64_t seed = 1;

  void validate(bool need_data = true, bool need_sweep = false) const {
    if (need_data && !std::filesystem::exists(data))
      throw std::invalid_argument("data path does not exist: " + data.string());
    Tariff::preset(tariff);
    train.validate();
    if (need_sweep && sweep.empty()) throw std::invalid_argument("sweep grid is empty");
    for (const auto& [name, values] : sweep)
      if (values.empty()) throw std::invalid_argument("sweep parameter '" + name + "' has no values");
  }
};

inline std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

/// Applies one named setting to a training configuration. Compound values:
/// lr = "actor;critic", net = "first;second", noise = "gaussian:0.2" | "ou",
/// discomfort = "<weight>" | "linear".
inline void apply_parameter(TrainConfig& c, const std::string& name, const std::string& value) {
  auto num = [&](const std::string& v) {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("bad number '" + v + "' for " + name);
    return d;
  };
  auto integer = [&](const std::string& v) {
    double d = num(v);
    if (d != static_cast<double>(static_cast<int>(d))) throw std::invalid_argument(name + " must be an integer");
    return static_cast<int>(d);
  };
  auto pair = [&](const std::string& v) {
    auto parts = split_list(v, ';');
    if (parts.size() != 2) throw std::invalid_argument(name + " expects two values separated by ';'");
    return parts;
  };
  if (name == "episodes") c.episodes = integer(value);
  else if (name == "episode_len_h") c.episode_len_h = integer(value);
  else if (name == "batch") c.batch = integer(value);
  else if (name == "buffer") c.buffer = integer(value);
  else if (name == "lr_actor") c.lr_actor = num(value);
  else if (name == "lr_critic") c.lr_critic = num(value);
  else if (name == "lr") {
    auto p = pair(value);
    c.lr_actor = num(p[0]);
    c.lr_critic = num(p[1]);
  } else if (name == "soft_update") c.soft_update = num(value);
  else if (name == "discount") c.discount = num(value);
  else if (name == "net") {
    auto p = pair(value);
    c.net_sizes = {integer(p[0]), integer(p[1])};
  } else if (name == "noise") {
    if (value == "ou") {
      c.noise_kind = NoiseKind::OrnsteinUhlenbeck;
    } else {
      auto p = split_list(value, ':');
      if (p.size() != 2 || p[0] != "gaussian") throw std::invalid_argument("noise expects 'gaussian:<sd>' or 'ou'");
      c.noise_kind = NoiseKind::Gaussian;
      c.noise_scale = num(p[1]);
    }
  } else if (name == "noise_kind") {
    if (value != "gaussian" && value != "ou") throw std::invalid_argument("noise_kind must be gaussian or ou");
    c.noise_kind = value == "ou" ? NoiseKind::OrnsteinUhlenbeck : NoiseKind::Gaussian;
  } else if (name == "noise_scale") c.noise_scale = num(value);
  else if (name == "ou_theta") c.ou_theta = num(value);
  else if (name == "ou_mu") c.ou_mu = num(value);
  else if (name == "discomfort") {
    if (value == "linear") c.discomfort_kind = DiscomfortKind::Linear;
    else c.discomfort_kind = DiscomfortKind::Quadratic, c.discomfort_weight = num(value);
  } else if (name == "discomfort_kind") {
    if (value != "quadratic" && value != "linear") throw std::invalid_argument("discomfort_kind must be quadratic or linear");
    c.discomfort_kind = value == "linear" ? DiscomfortKind::Linear : DiscomfortKind::Quadratic;
  } else if (name == "discomfort_weight") c.discomfort_weight = num(value);
  else if (name == "penalty_weight" || name == "penalty") c.penalty_weight = num(value);
  else if (name == "seed_count" || name == "seeds") c.seed_count = integer(value);
  else throw std::invalid_argument("unknown training parameter '" + name + "'");
}

/// Sections: [experiment] data, tariff, preset, out, seed; [train] any
/// parameter accepted by apply_parameter; [sweep] name = v1, v2, ...
/// HEMS_OUT in the environment overrides the output directory. A non-empty
/// `preset` replaces the file's preset; [train] keys still apply on top of it.
inline ExperimentConfig parse_config(std::istream& in, const std::string& preset = {}) {
  ExperimentConfig cfg;
  auto kv = dataio::detail::read_key_values(in);
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto file_preset = take("experiment.preset");
  if (!preset.empty()) cfg.train = TrainConfig::preset(preset);
  else if (file_preset) cfg.train = TrainConfig::preset(*file_preset);
  if (auto v = take("experiment.data")) cfg.data = *v;
  if (auto v = take("experiment.tariff")) cfg.tariff = *v;
  if (auto v = take("experiment.out")) cfg.out = *v;
  if (auto v = take("experiment.seed")) cfg.seed = std::stoull(*v);
  std::vector<std::pair<std::string, std::string>> rest(kv.begin(), kv.end());
  for (const auto& [key, value] : rest) {
    if (key.rfind("train.", 0) == 0) {
      apply_parameter(cfg.train, key.substr(6), value);
    } else if (key.rfind("sweep.", 0) == 0) {
      cfg.sweep.emplace_back(key.substr(6), split_list(value, ','));
    } else {
      throw std::invalid_argument("unknown configuration key '" + key + "'");
    }
  }
  if (const char* out = std::getenv("HEMS_OUT"); out && *out) cfg.out = out;
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const std::string& preset = {}) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  return parse_config(in, preset);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepPoint {
  std::string label;  // e.g. "batch=100" or "batch=100 lr=0.0005;0.005"
  TrainConfig train;
};

struct SweepStage {
  std::vector<SweepPoint> points;
  int seeds = 0;
  int keep_top = 0;  // when > 0, a second pass reruns the best points
  int rerun_seeds = 0;
};

/// One model per alternative value, all other settings at their defaults.
inline SweepStage one_at_a_time(const TrainConfig& base, const SweepGrid& grid, int seeds) {
  SweepStage s;
  s.seeds = seeds;
  for (const auto& [name, values] : grid)
    for (const auto& v : values) {
      TrainConfig c = base;
      apply_parameter(c, name, v);
      c.validate();
      s.points.push_back({name + "=" + v, c});
    }
  return s;
}

/// Every combination of the grid's values.
inline std::vector<SweepPoint> cartesian(const TrainConfig& base, const SweepGrid& grid) {
  std::vector<SweepPoint> out{{"", base}};
  for (const auto& [name, values] : grid) {
    std::vector<SweepPoint> next;
    for (const auto& p : out)
      for (const auto& v : values) {
        SweepPoint q = p;
        apply_parameter(q.train, name, v);
        q.label += (q.label.empty() ? "" : " ") + name + "=" + v;
        next.push_back(q);
      }
    out = std::move(next);
  }
  for (const auto& p : out) p.train.validate();
  return out;
}

/// Two alternatives per parameter around the reference settings: 16 models, 40 seeds.
inline SweepGrid parameter_search_grid() {
  return {{"batch", {"100", "150"}},
          {"buffer", {"20000", "30000"}},
          {"lr", {"0.0005;0.005", "0.00005;0.0005"}},
          {"noise", {"gaussian:0.2", "ou"}},
          {"soft_update", {"0.005", "0.0005"}},
          {"discomfort", {"0.04", "linear"}},
          {"net", {"200;400", "400;800"}},
          {"penalty", {"0.00", "1.00"}}};
}

/// Reference value plus two alternatives for four parameters: 3^4 = 81 models.
inline SweepGrid grid_search_grid() {
  return {{"batch", {"120", "100", "150"}},
          {"lr", {"0.0001;0.001", "0.0005;0.005", "0.00005;0.0005"}},
          {"noise", {"gaussian:0.1", "gaussian:0.2", "gaussian:0.4"}},
          {"net", {"300;600", "200;400", "250;500"}}};
}

inline SweepStage sweep_preset(const std::string& name, const TrainConfig& base = TrainConfig::paper()) {
  if (name == "parameter-search") return one_at_a_time(base, parameter_search_grid(), 40);
  if (name == "grid-search") {
    SweepStage s;
    s.points = cartesian(base, grid_search_grid());
    s.seeds = 10;
    s.keep_top = 4;
    s.rerun_seeds = 40;
    return s;
  }
  throw std::invalid_argument("unknown sweep preset '" + name + "'");
}

}  // namespace hems::config

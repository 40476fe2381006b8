#ifndef UAVSWARM_CONFIG_HPP
#define UAVSWARM_CONFIG_HPP

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace uavswarm {

/// Raised for any invalid configuration value; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a forward/backward pass or a loss produces a non-finite value.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

struct AeroParams {
  double rho = 1.225;           // kg/m^3
  double disc_area = 0.79;      // m^2
  double delta = 0.012;         // blade section drag coefficient
  double rotor_solidity = 0.1;  //
  double plate_area = 0.01;     // fuselage equivalent flat plate, m^2
  double thrust_coeff = 0.3;    //
  double induced_corr = 0.13;   // incremental correction of induced power
  double mass = 2.0;            // kg
  double g_mag = 9.8;           // m/s^2

  void validate() const {
    const std::pair<const char*, double> fields[] = {
        {"aero.rho", rho},
        {"aero.disc_area", disc_area},
        {"aero.delta", delta},
        {"aero.rotor_solidity", rotor_solidity},
        {"aero.plate_area", plate_area},
        {"aero.thrust_coeff", thrust_coeff},
        {"aero.induced_corr", induced_corr},
        {"aero.mass", mass},
        {"aero.g_mag", g_mag}};
    for (const auto& [name, value] : fields) {
      if (!(value > 0.0) || !std::isfinite(value)) {
        throw ConfigError(std::string(name) + " must be > 0");
      }
    }
  }
};

struct ObstructionConfig {
  int count = 2;
  double half_extent = 150.0;  // m, axis-aligned square
};

enum class PowerMapping { Softmax, Sigmoid };

struct ScenarioConfig {
  double area_x = 1500.0;
  double area_y = 1500.0;
  double area_z = 100.0;
  int num_uavs = 3;
  int num_users = 9;
  int num_subcarriers = 3;
  int horizon = 60;
  double slot_duration = 1.0;  // s
  double h_min = 40.0;
  double h_max = 100.0;
  double v_max = 20.0;
  double a_max = 5.0;
  double d_min_uav = 25.0;
  double d_max_user = 10.0;
  double p_max = dbm_to_watt(30.0);        // W
  double carrier_freq = 2.0;               // GHz
  double noise_power = dbm_to_watt(-107);  // W
  // Scaling knob for the reward magnitude, not a physical constant of the model.
  double subcarrier_bandwidth = 1e3;  // Hz
  AeroParams aero;
  ObstructionConfig obstruction;
  /// Penalty (reward units) per UAV pair closer than d_min_uav.
  double collision_penalty = 0.5;
  double reward_scale = 1.0;
  PowerMapping power_mapping = PowerMapping::Softmax;
  std::uint64_t seed = 1;

  void validate() const {
    auto positive = [](const char* name, double v) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be > 0");
    };
    positive("scenario.area_x", area_x);
    positive("scenario.area_y", area_y);
    positive("scenario.area_z", area_z);
    positive("scenario.slot_duration", slot_duration);
    positive("scenario.v_max", v_max);
    positive("scenario.a_max", a_max);
    positive("scenario.p_max_dbm", p_max);
    positive("scenario.carrier_freq", carrier_freq);
    positive("scenario.noise_power_dbm", noise_power);
    positive("scenario.subcarrier_bandwidth", subcarrier_bandwidth);
    if (num_uavs < 1) throw ConfigError("scenario.num_uavs must be >= 1");
    if (num_users < 1) throw ConfigError("scenario.num_users must be >= 1");
    if (num_subcarriers < 1) throw ConfigError("scenario.num_subcarriers must be >= 1");
    if (horizon < 1) throw ConfigError("scenario.horizon must be >= 1");
    if (!(h_min > 0.0)) throw ConfigError("scenario.h_min must be > 0");
    if (!(h_min < h_max)) throw ConfigError("scenario.h_max must exceed h_min");
    if (h_max > area_z) throw ConfigError("scenario.h_max must not exceed area_z");
    if (d_min_uav < 0.0) throw ConfigError("scenario.d_min_uav must be >= 0");
    if (d_max_user < 0.0) throw ConfigError("scenario.d_max_user must be >= 0");
    if (obstruction.count < 0) throw ConfigError("obstruction.count must be >= 0");
    if (obstruction.half_extent < 0.0) throw ConfigError("obstruction.half_extent must be >= 0");
    if (collision_penalty < 0.0) throw ConfigError("scenario.collision_penalty must be >= 0");
    positive("scenario.reward_scale", reward_scale);
    aero.validate();
  }

  /// Non-fatal findings, e.g. more channel slots than users.
  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (num_uavs * num_subcarriers > num_users) {
      out.push_back("num_uavs * num_subcarriers exceeds num_users; channel resources are not scarce");
    }
    return out;
  }
};

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 256;
  int reuse = 20;          // sample reuse K
  int buffer_size = 2048;  // memory M
  int episodes = 2000;
  double gamma = 0.95;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double entropy_coef = 0.001;
  std::uint64_t seed = 1;
  int workers = 1;
  bool gae_paper_form = false;
  bool critic_l2_norm = false;  // plain (non-squared) L2 loss instead of MSE
  bool normalize_advantages = true;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  double init_log_std = 0.0;   // starting bias of every Gaussian log-std output
  OptimizerKind optimizer = OptimizerKind::Adam;
  int checkpoint_every = 0;  // episodes; 0 = only the final checkpoint
  std::vector<int> actor_trunk{256, 128};
  int head_hidden = 64;
  std::vector<int> critic_hidden{256, 128, 64};

  void validate() const {
    if (!(lr >= 0.0)) throw ConfigError("train.lr must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (buffer_size < 1) throw ConfigError("train.buffer_size must be >= 1");
    if (batch_size > buffer_size) throw ConfigError("train.batch_size must not exceed train.buffer_size");
    if (reuse < 1) throw ConfigError("train.reuse must be >= 1");
    if (episodes < 0) throw ConfigError("train.episodes must be >= 0");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("train.gamma must be in [0,1]");
    if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("train.gae_lambda must be in [0,1]");
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("train.clip_eps must be in (0,1)");
    if (entropy_coef < 0.0) throw ConfigError("train.entropy_coef must be >= 0");
    if (workers < 1) throw ConfigError("train.workers must be >= 1");
    if (buffer_size % workers != 0) throw ConfigError("train.buffer_size must be divisible by train.workers");
    if (actor_trunk.empty()) throw ConfigError("train.actor_trunk must list at least one layer");
    if (head_hidden < 1) throw ConfigError("train.head_hidden must be >= 1");
    if (!(init_log_std >= -5.0 && init_log_std <= 2.0)) throw ConfigError("train.init_log_std must be in [-5,2]");
    for (int w : actor_trunk) {
      if (w < 1) throw ConfigError("train.actor_trunk widths must be >= 1");
    }
    for (int w : critic_hidden) {
      if (w < 1) throw ConfigError("train.critic_hidden widths must be >= 1");
    }
  }
};

struct RunConfig {
  ScenarioConfig scenario;
  TrainConfig train;

  void validate() const {
    scenario.validate();
    train.validate();
  }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::string token;
  for (char c : text + ",") {
    if (c == ',' || c == ' ' || c == '[' || c == ']') {
      if (!token.empty()) out.push_back(static_cast<int>(parse_int(key, token)));
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  return out;
}

inline void flatten_json(const nlohmann::json& j, const std::string& prefix,
                         std::map<std::string, std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten_json(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    std::string joined;
    for (const auto& e : j) {
      if (!joined.empty()) joined += ",";
      joined += e.is_string() ? e.get<std::string>() : e.dump();
    }
    out[prefix] = joined;
  } else if (j.is_string()) {
    out[prefix] = j.get<std::string>();
  } else {
    out[prefix] = j.dump();
  }
}

}  // namespace detail

using KeyValues = std::map<std::string, std::string>;

/// Applies flat `section.key = value` settings. Unknown keys are rejected.
inline void apply_settings(RunConfig& cfg, const KeyValues& kv) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto dbl = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = detail::parse_double(k, v); };
  };
  auto dbm = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      field = dbm_to_watt(detail::parse_double(k, v));
    };
  };
  auto integer = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      field = static_cast<int>(detail::parse_int(k, v));
    };
  };
  auto u64 = [](std::uint64_t& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      const long long x = detail::parse_int(k, v);
      if (x < 0) throw ConfigError(k + " must be >= 0");
      field = static_cast<std::uint64_t>(x);
    };
  };
  auto boolean = [](bool& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = detail::parse_bool(k, v); };
  };
  auto list = [](std::vector<int>& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = detail::parse_int_list(k, v); };
  };

  ScenarioConfig& s = cfg.scenario;
  TrainConfig& t = cfg.train;
  const std::map<std::string, Setter> table = {
      {"scenario.area_x", dbl(s.area_x)},
      {"scenario.area_y", dbl(s.area_y)},
      {"scenario.area_z", dbl(s.area_z)},
      {"scenario.num_uavs", integer(s.num_uavs)},
      {"scenario.num_users", integer(s.num_users)},
      {"scenario.num_subcarriers", integer(s.num_subcarriers)},
      {"scenario.horizon", integer(s.horizon)},
      {"scenario.slot_duration", dbl(s.slot_duration)},
      {"scenario.h_min", dbl(s.h_min)},
      {"scenario.h_max", dbl(s.h_max)},
      {"scenario.v_max", dbl(s.v_max)},
      {"scenario.a_max", dbl(s.a_max)},
      {"scenario.d_min_uav", dbl(s.d_min_uav)},
      {"scenario.d_max_user", dbl(s.d_max_user)},
      {"scenario.p_max_dbm", dbm(s.p_max)},
      {"scenario.carrier_freq", dbl(s.carrier_freq)},
      {"scenario.noise_power_dbm", dbm(s.noise_power)},
      {"scenario.subcarrier_bandwidth", dbl(s.subcarrier_bandwidth)},
      {"scenario.collision_penalty", dbl(s.collision_penalty)},
      {"scenario.reward_scale", dbl(s.reward_scale)},
      {"scenario.seed", u64(s.seed)},
      {"scenario.power_mapping",
       [&s](const std::string& k, const std::string& v) {
         if (v == "softmax") {
           s.power_mapping = PowerMapping::Softmax;
         } else if (v == "sigmoid") {
           s.power_mapping = PowerMapping::Sigmoid;
         } else {
           throw ConfigError(k + ": expected softmax or sigmoid, got '" + v + "'");
         }
       }},
      {"aero.rho", dbl(s.aero.rho)},
      {"aero.disc_area", dbl(s.aero.disc_area)},
      {"aero.delta", dbl(s.aero.delta)},
      {"aero.rotor_solidity", dbl(s.aero.rotor_solidity)},
      {"aero.plate_area", dbl(s.aero.plate_area)},
      {"aero.thrust_coeff", dbl(s.aero.thrust_coeff)},
      {"aero.induced_corr", dbl(s.aero.induced_corr)},
      {"aero.mass", dbl(s.aero.mass)},
      {"aero.g_mag", dbl(s.aero.g_mag)},
      {"obstruction.count", integer(s.obstruction.count)},
      {"obstruction.half_extent", dbl(s.obstruction.half_extent)},
      {"train.lr", dbl(t.lr)},
      {"train.batch_size", integer(t.batch_size)},
      {"train.reuse", integer(t.reuse)},
      {"train.buffer_size", integer(t.buffer_size)},
      {"train.episodes", integer(t.episodes)},
      {"train.gamma", dbl(t.gamma)},
      {"train.gae_lambda", dbl(t.gae_lambda)},
      {"train.clip_eps", dbl(t.clip_eps)},
      {"train.entropy_coef", dbl(t.entropy_coef)},
      {"train.seed", u64(t.seed)},
      {"train.workers", integer(t.workers)},
      {"train.gae_paper_form", boolean(t.gae_paper_form)},
      {"train.critic_l2_norm", boolean(t.critic_l2_norm)},
      {"train.normalize_advantages", boolean(t.normalize_advantages)},
      {"train.max_grad_norm", dbl(t.max_grad_norm)},
      {"train.init_log_std", dbl(t.init_log_std)},
      {"train.checkpoint_every", integer(t.checkpoint_every)},
      {"train.actor_trunk", list(t.actor_trunk)},
      {"train.head_hidden", integer(t.head_hidden)},
      {"train.critic_hidden", list(t.critic_hidden)},
      {"train.optimizer",
       [&t](const std::string& k, const std::string& v) {
         if (v == "adam") {
           t.optimizer = OptimizerKind::Adam;
         } else if (v == "sgd") {
           t.optimizer = OptimizerKind::Sgd;
         } else {
           throw ConfigError(k + ": expected adam or sgd, got '" + v + "'");
         }
       }},
  };

  for (const auto& [key, value] : kv) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key + ": unknown configuration key");
    it->second(key, value);
  }
}

/// Parses `section.key=value` override strings (as given on the command line).
inline KeyValues parse_overrides(const std::vector<std::string>& items) {
  KeyValues kv;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(item + ": override must look like section.key=value");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

/// Reads a configuration file. `.json` files are parsed as JSON; anything else
/// as INI-style `[section]` / `key = value`.
inline KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
  KeyValues kv;
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    detail::flatten_json(j, "", kv);
    return kv;
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(section + ": keys must live inside a [section]");
    for (const auto& [key, value] : body) kv[section + "." + key] = value.get_value<std::string>();
  }
  return kv;
}

inline RunConfig load_config(const std::filesystem::path& path, const KeyValues& overrides = {}) {
  RunConfig cfg;
  apply_settings(cfg, read_config_file(path));
  apply_settings(cfg, overrides);
  cfg.validate();
  return cfg;
}

/// Serializes the effective configuration in the same flat key space accepted by
/// the loader (dBm fields converted back).
inline nlohmann::json to_json(const RunConfig& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  const TrainConfig& t = cfg.train;
  nlohmann::json j;
  j["scenario"] = {{"area_x", s.area_x},
                   {"area_y", s.area_y},
                   {"area_z", s.area_z},
                   {"num_uavs", s.num_uavs},
                   {"num_users", s.num_users},
                   {"num_subcarriers", s.num_subcarriers},
                   {"horizon", s.horizon},
                   {"slot_duration", s.slot_duration},
                   {"h_min", s.h_min},
                   {"h_max", s.h_max},
                   {"v_max", s.v_max},
                   {"a_max", s.a_max},
                   {"d_min_uav", s.d_min_uav},
                   {"d_max_user", s.d_max_user},
                   {"p_max_dbm", watt_to_dbm(s.p_max)},
                   {"carrier_freq", s.carrier_freq},
                   {"noise_power_dbm", watt_to_dbm(s.noise_power)},
                   {"subcarrier_bandwidth", s.subcarrier_bandwidth},
                   {"collision_penalty", s.collision_penalty},
                   {"reward_scale", s.reward_scale},
                   {"power_mapping", s.power_mapping == PowerMapping::Softmax ? "softmax" : "sigmoid"},
                   {"seed", s.seed}};
  j["aero"] = {{"rho", s.aero.rho},
               {"disc_area", s.aero.disc_area},
               {"delta", s.aero.delta},
               {"rotor_solidity", s.aero.rotor_solidity},
               {"plate_area", s.aero.plate_area},
               {"thrust_coeff", s.aero.thrust_coeff},
               {"induced_corr", s.aero.induced_corr},
               {"mass", s.aero.mass},
               {"g_mag", s.aero.g_mag}};
  j["obstruction"] = {{"count", s.obstruction.count}, {"half_extent", s.obstruction.half_extent}};
  j["train"] = {{"lr", t.lr},
                {"batch_size", t.batch_size},
                {"reuse", t.reuse},
                {"buffer_size", t.buffer_size},
                {"episodes", t.episodes},
                {"gamma", t.gamma},
                {"gae_lambda", t.gae_lambda},
                {"clip_eps", t.clip_eps},
                {"entropy_coef", t.entropy_coef},
                {"seed", t.seed},
                {"workers", t.workers},
                {"gae_paper_form", t.gae_paper_form},
                {"critic_l2_norm", t.critic_l2_norm},
                {"normalize_advantages", t.normalize_advantages},
                {"max_grad_norm", t.max_grad_norm},
                {"init_log_std", t.init_log_std},
                {"checkpoint_every", t.checkpoint_every},
                {"optimizer", t.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
                {"actor_trunk", t.actor_trunk},
                {"head_hidden", t.head_hidden},
                {"critic_hidden", t.critic_hidden}};
  return j;
}

}  // namespace uavswarm

#endif  // UAVSWARM_CONFIG_HPP

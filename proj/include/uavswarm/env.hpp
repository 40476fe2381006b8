#ifndef UAVSWARM_ENV_HPP
#define UAVSWARM_ENV_HPP

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavswarm/channel.hpp"
#include "uavswarm/config.hpp"
#include "uavswarm/energy.hpp"
#include "uavswarm/masking.hpp"
#include "uavswarm/rng.hpp"
#include "uavswarm/world.hpp"

namespace uavswarm {

/// Observation vector. Layout: user positions (x, y) for k = 0..K-1, then
/// previous-slot UAV positions (x, y, z) for m = 0..M-1, then previous-slot UAV
/// speeds; length 2K + 4M.
struct EnvState {
  Eigen::VectorXd raw;
  Eigen::VectorXd scale;  // per-entry normalization constant

  /// Entries mapped to roughly [-1, 1]: 2 * raw / scale - 1.
  Eigen::VectorXd normalized() const { return 2.0 * raw.cwiseQuotient(scale).array() - 1.0; }
  Eigen::Index size() const { return raw.size(); }
};

inline int state_dim(const ScenarioConfig& cfg) { return 2 * cfg.num_users + 4 * cfg.num_uavs; }

inline EnvState build_state(const WorldState& world, const ScenarioConfig& cfg) {
  const int K = static_cast<int>(world.users.size());
  const int M = static_cast<int>(world.uavs.size());
  EnvState s;
  s.raw.resize(2 * K + 4 * M);
  s.scale.resize(2 * K + 4 * M);
  int i = 0;
  for (const auto& u : world.users) {
    s.raw[i] = u.position.x();
    s.scale[i++] = cfg.area_x;
    s.raw[i] = u.position.y();
    s.scale[i++] = cfg.area_y;
  }
  for (const auto& q : world.uavs) {
    s.raw[i] = q.position.x();
    s.scale[i++] = cfg.area_x;
    s.raw[i] = q.position.y();
    s.scale[i++] = cfg.area_y;
    s.raw[i] = q.position.z();
    s.scale[i++] = cfg.area_z;
  }
  for (const auto& q : world.uavs) {
    s.raw[i] = q.speed;
    s.scale[i++] = cfg.v_max;
  }
  return s;
}

struct MotionCommand {
  double speed = 0.0;    // (0, v_max)
  double azimuth = 0.0;  // (0, 2pi)
  double polar = std::numbers::pi / 2.0;  // (pi/3, 2pi/3), measured from +z
};

/// One UAV's decision for a slot.
struct HybridAction {
  std::vector<int> picks;        // per subcarrier: user or kNoUser
  Eigen::VectorXd power_logits;  // mapped to powers by map_power
  MotionCommand motion;
};

/// Transmit powers from unconstrained logits; the result never exceeds p_max in total.
inline Eigen::VectorXd map_power(const Eigen::VectorXd& logits, double p_max,
                                 PowerMapping mapping = PowerMapping::Softmax) {
  const auto n = logits.size();
  if (n == 0) return {};
  if (mapping == PowerMapping::Sigmoid) {
    return (p_max / static_cast<double>(n)) * (1.0 / (1.0 + (-logits.array()).exp())).matrix();
  }
  const double hi = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - hi).exp().matrix();
  return p_max * e / e.sum();
}

struct KinematicsEvents {
  bool accel_limited = false;
  bool altitude_clamped = false;
  bool area_clamped = false;
};

struct KinematicsResult {
  UavState uav;
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();  // along-velocity, |a| <= a_max
  KinematicsEvents events;
};

inline Eigen::Vector3d direction_from_angles(double azimuth, double polar) {
  return {std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar)};
}

/// Moves one UAV for a slot. The commanded speed is limited to v_max and to a
/// change of at most a_max * Ts; the end point is clamped to the area and to
/// [h_min, h_max]. The new velocity is the realized displacement over Ts.
inline KinematicsResult apply_kinematics(const UavState& uav, const MotionCommand& cmd, const ScenarioConfig& cfg) {
  KinematicsResult out;
  const double ts = cfg.slot_duration;
  const double dv = cfg.a_max * ts;
  double speed = std::clamp(cmd.speed, 0.0, cfg.v_max);
  const double limited = std::clamp(speed, uav.speed - dv, uav.speed + dv);
  if (limited != speed) out.events.accel_limited = true;
  speed = std::clamp(limited, 0.0, cfg.v_max);

  const Eigen::Vector3d dir = direction_from_angles(cmd.azimuth, cmd.polar);
  Eigen::Vector3d target = uav.position + speed * ts * dir;
  const Eigen::Vector3d unclamped = target;
  target.x() = std::clamp(target.x(), 0.0, cfg.area_x);
  target.y() = std::clamp(target.y(), 0.0, cfg.area_y);
  target.z() = std::clamp(target.z(), cfg.h_min, cfg.h_max);
  out.events.area_clamped = target.x() != unclamped.x() || target.y() != unclamped.y();
  out.events.altitude_clamped = target.z() != unclamped.z();

  out.uav.position = target;
  out.uav.velocity = (target - uav.position) / ts;
  out.uav.speed = out.uav.velocity.norm();
  out.acceleration = along_velocity_acceleration(uav.velocity, out.uav.velocity, ts, cfg.a_max);
  return out;
}

struct ViolationRecord {
  int collision_pairs = 0;  // pairs closer than d_min_uav
  double penalty = 0.0;
  int accel_limited = 0;
  int altitude_clamped = 0;
  int area_clamped = 0;
};

struct StepOutcome {
  EnvState next_state;
  double reward = 0.0;
  double efficiency = 0.0;  // bit/J
  RateReport report;
  double energy = 0.0;  // J, swarm total
  std::vector<double> uav_energy;
  ViolationRecord violations;
  bool done = false;
};

/// Single-threaded episode driver. Each instance owns its world and random
/// streams; run one instance per worker for parallel collection.
class Environment {
 public:
  Environment(ScenarioConfig cfg, std::uint64_t seed, std::uint64_t salt = 0)
      : cfg_(std::move(cfg)), streams_(seed, salt) {
    cfg_.validate();
  }

  /// Fresh episode: new users, new obstructed regions, UAVs back at the start formation.
  EnvState reset() {
    world_ = init_world(cfg_, streams_);
    started_ = true;
    return build_state(world_, cfg_);
  }

  StepOutcome step(std::span<const HybridAction> joint) {
    if (!started_) throw std::logic_error("Environment::step before reset");
    if (done()) throw std::logic_error("Environment::step after the episode ended");
    validate_joint(joint);
    const int M = cfg_.num_uavs;
    const int N = cfg_.num_subcarriers;
    const double ts = cfg_.slot_duration;
    StepOutcome out;

    // 1. kinematics
    std::vector<Eigen::Vector3d> accel(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
      KinematicsResult k = apply_kinematics(world_.uavs[m], joint[m].motion, cfg_);
      world_.uavs[m] = k.uav;
      accel[m] = k.acceleration;
      out.violations.accel_limited += k.events.accel_limited;
      out.violations.altitude_clamped += k.events.altitude_clamped;
      out.violations.area_clamped += k.events.area_clamped;
    }

    // 2. separation
    for (int m = 0; m < M; ++m) {
      for (int j = m + 1; j < M; ++j) {
        if ((world_.uavs[m].position - world_.uavs[j].position).norm() < cfg_.d_min_uav) {
          ++out.violations.collision_pairs;
        }
      }
    }
    out.violations.penalty = cfg_.collision_penalty * out.violations.collision_pairs;

    // 3. channel and rates
    Eigen::MatrixXd power = Eigen::MatrixXd::Zero(M, N);
    std::vector<std::vector<int>> picks;
    for (int m = 0; m < M; ++m) {
      const Eigen::VectorXd p = map_power(joint[m].power_logits, cfg_.p_max, cfg_.power_mapping);
      for (int n = 0; n < N; ++n) power(m, n) = joint[m].picks[n] == kNoUser ? 0.0 : p[n];
      picks.push_back(joint[m].picks);
    }
    const AllocationDecision alloc(cfg_.num_users, std::move(picks), std::move(power), cfg_.p_max);
    const GainTable gains = compute_gains(world_, cfg_, streams_(Stream::Fading));
    out.report = rates_and_fairness(alloc, gains, world_.rates, cfg_.subcarrier_bandwidth, cfg_.noise_power);

    // 4. energy from realized kinematics
    for (int m = 0; m < M; ++m) {
      out.uav_energy.push_back(propulsion_energy(world_.uavs[m].velocity, accel[m], cfg_.aero, ts));
    }
    out.energy = swarm_energy(out.uav_energy);

    // 5. reward in kbit/J
    out.efficiency = energy_efficiency(out.report.fairness, out.report.total, out.energy, ts);
    out.reward = cfg_.reward_scale * out.efficiency / 1e3 - out.violations.penalty;

    // 6. user mobility, 7. next observation
    world_ = step_users(std::move(world_), cfg_, streams_(Stream::Mobility));
    ++world_.slot;
    out.done = done();
    out.next_state = build_state(world_, cfg_);
    last_alloc_ = alloc.picks();
    last_power_ = alloc.powers();
    return out;
  }

  bool done() const { return world_.slot >= cfg_.horizon; }
  const WorldState& world() const { return world_; }
  const ScenarioConfig& config() const { return cfg_; }
  RandomStreams& streams() { return streams_; }
  const std::vector<std::vector<int>>& last_assignment() const { return last_alloc_; }
  const Eigen::MatrixXd& last_power() const { return last_power_; }

 private:
  void validate_joint(std::span<const HybridAction> joint) const {
    if (static_cast<int>(joint.size()) != cfg_.num_uavs) {
      throw std::invalid_argument("joint action must have one entry per UAV");
    }
    MaskState mask(cfg_.num_users, cfg_.num_uavs, cfg_.num_subcarriers);
    for (int m = 0; m < cfg_.num_uavs; ++m) {
      const HybridAction& a = joint[m];
      if (static_cast<int>(a.picks.size()) != cfg_.num_subcarriers ||
          a.power_logits.size() != cfg_.num_subcarriers) {
        throw std::invalid_argument("UAV " + std::to_string(m) + ": action has the wrong subcarrier count");
      }
      if (!a.power_logits.allFinite() || !std::isfinite(a.motion.speed) || !std::isfinite(a.motion.azimuth) ||
          !std::isfinite(a.motion.polar)) {
        throw std::invalid_argument("UAV " + std::to_string(m) + ": non-finite action component");
      }
      for (int n = 0; n < cfg_.num_subcarriers; ++n) {
        const int k = a.picks[n];
        if (k == kNoUser) continue;
        if (k < 0 || k >= cfg_.num_users) throw std::invalid_argument("assignment user index out of range");
        if (!mask.is_valid(k, m, n)) {
          throw std::invalid_argument("joint assignment violates the user/channel constraints at UAV " +
                                      std::to_string(m));
        }
        mask.assign(k, m, n);
      }
    }
  }

  ScenarioConfig cfg_;
  RandomStreams streams_;
  WorldState world_;
  bool started_ = false;
  std::vector<std::vector<int>> last_alloc_;
  Eigen::MatrixXd last_power_;
};

/// One JSON-lines trace record for a completed step.
inline nlohmann::json step_trace_json(int slot, const WorldState& world, const std::vector<std::vector<int>>& picks,
                                      const Eigen::MatrixXd& power, const StepOutcome& out) {
  nlohmann::json j;
  j["schema"] = "step_trace v1";
  j["slot"] = slot;
  nlohmann::json uavs = nlohmann::json::array();
  for (const auto& u : world.uavs) {
    uavs.push_back({u.position.x(), u.position.y(), u.position.z()});
  }
  j["uav_positions"] = uavs;
  j["assignments"] = picks;
  nlohmann::json pw = nlohmann::json::array();
  for (Eigen::Index m = 0; m < power.rows(); ++m) {
    std::vector<double> row(power.cols());
    for (Eigen::Index n = 0; n < power.cols(); ++n) row[n] = power(m, n);
    pw.push_back(row);
  }
  j["powers"] = pw;
  j["user_rates"] = out.report.per_user;
  j["fairness"] = out.report.fairness;
  j["energy"] = out.energy;
  j["reward"] = out.reward;
  return j;
}

}  // namespace uavswarm

#endif  // UAVSWARM_ENV_HPP

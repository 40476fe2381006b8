#ifndef UAVSWARM_WORLD_HPP
#define UAVSWARM_WORLD_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "uavswarm/config.hpp"
#include "uavswarm/rng.hpp"

namespace uavswarm {

struct UavState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double speed = 0.0;  // cached |velocity|
};

struct UserState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

/// Axis-aligned square with closed boundary.
struct ObstructedRegion {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double half_extent = 0.0;

  bool contains(const Eigen::Vector2d& p) const {
    return std::abs(p.x() - center.x()) <= half_extent && std::abs(p.y() - center.y()) <= half_extent;
  }
};

/// Running per-user and total rate sums since the start of the episode.
struct RateAccumulator {
  std::vector<double> per_user;
  double total = 0.0;

  explicit RateAccumulator(std::size_t users = 0) : per_user(users, 0.0) {}

  void add(std::span<const double> rates) {
    if (rates.size() != per_user.size()) throw std::invalid_argument("RateAccumulator::add: size mismatch");
    for (std::size_t k = 0; k < rates.size(); ++k) {
      per_user[k] += rates[k];
      total += rates[k];
    }
  }
};

struct WorldState {
  std::vector<UavState> uavs;
  std::vector<UserState> users;
  std::vector<ObstructedRegion> regions;
  int slot = 0;
  RateAccumulator rates;
};

/// Start formation: evenly spaced on y = area_y/2 at mid altitude, at rest.
inline std::vector<Eigen::Vector3d> initial_uav_positions(const ScenarioConfig& cfg) {
  std::vector<Eigen::Vector3d> out;
  const double z = 0.5 * (cfg.h_min + cfg.h_max);
  for (int m = 0; m < cfg.num_uavs; ++m) {
    const double x = cfg.area_x * (m + 1) / (cfg.num_uavs + 1);
    out.emplace_back(x, 0.5 * cfg.area_y, z);
  }
  return out;
}

inline ObstructedRegion random_region(const ScenarioConfig& cfg, Rng& rng) {
  ObstructedRegion r;
  r.half_extent = std::min({cfg.obstruction.half_extent, 0.5 * cfg.area_x, 0.5 * cfg.area_y});
  r.center = {uniform(rng, r.half_extent, cfg.area_x - r.half_extent),
              uniform(rng, r.half_extent, cfg.area_y - r.half_extent)};
  return r;
}

inline WorldState init_world(const ScenarioConfig& cfg, RandomStreams& streams) {
  cfg.validate();
  WorldState w;
  for (const auto& p : initial_uav_positions(cfg)) {
    UavState u;
    u.position = p;
    w.uavs.push_back(u);
  }
  Rng& placement = streams(Stream::Placement);
  for (int k = 0; k < cfg.num_users; ++k) {
    UserState u;
    u.position = {uniform(placement, 0.0, cfg.area_x), uniform(placement, 0.0, cfg.area_y)};
    w.users.push_back(u);
  }
  for (int i = 0; i < cfg.obstruction.count; ++i) w.regions.push_back(random_region(cfg, streams(Stream::Regions)));
  w.slot = 0;
  w.rates = RateAccumulator(static_cast<std::size_t>(cfg.num_users));
  return w;
}

/// Mirrors a coordinate that overshot [lo, hi] back inside.
inline double reflect_into(double x, double lo, double hi) {
  if (hi <= lo) return lo;
  if (x >= lo && x <= hi) return x;
  const double span = hi - lo;
  double t = std::fmod(x - lo, 2.0 * span);
  if (t < 0.0) t += 2.0 * span;
  if (t > span) t = 2.0 * span - t;
  return lo + t;
}

inline Eigen::Vector2d displace_user(const Eigen::Vector2d& p, double distance, double angle,
                                     const ScenarioConfig& cfg) {
  return {reflect_into(p.x() + distance * std::cos(angle), 0.0, cfg.area_x),
          reflect_into(p.y() + distance * std::sin(angle), 0.0, cfg.area_y)};
}

/// One slot of random-walk mobility: distance U(0, d_max), heading U(0, 2pi),
/// specular reflection at the area boundary.
[[nodiscard]] inline WorldState step_users(WorldState world, const ScenarioConfig& cfg, Rng& mobility) {
  for (auto& u : world.users) {
    const double d = uniform(mobility, 0.0, cfg.d_max_user);
    const double theta = uniform(mobility, 0.0, 2.0 * std::numbers::pi);
    u.position = displace_user(u.position, d, theta, cfg);
  }
  return world;
}

inline bool is_obstructed(const WorldState& world, std::size_t user) {
  if (user >= world.users.size()) throw std::out_of_range("is_obstructed: user index out of range");
  const auto& p = world.users[user].position;
  return std::any_of(world.regions.begin(), world.regions.end(),
                     [&](const ObstructedRegion& r) { return r.contains(p); });
}

}  // namespace uavswarm

#endif  // UAVSWARM_WORLD_HPP

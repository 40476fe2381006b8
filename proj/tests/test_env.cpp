#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "uavswarm/env.hpp"

using namespace uavswarm;

namespace {

HybridAction idle_action(const ScenarioConfig& cfg, double speed = 0.0, double azimuth = 0.0,
                         double polar = std::numbers::pi / 2.0) {
  HybridAction a;
  a.picks.assign(static_cast<std::size_t>(cfg.num_subcarriers), kNoUser);
  a.power_logits = Eigen::VectorXd::Zero(cfg.num_subcarriers);
  a.motion = {speed, azimuth, polar};
  return a;
}

}  // namespace

TEST(Reset, StateLayoutAndDeterminism) {
  ScenarioConfig cfg;
  Environment a(cfg, 5), b(cfg, 5);
  const EnvState sa = a.reset();
  const EnvState sb = b.reset();
  EXPECT_EQ(sa.size(), 30);
  EXPECT_EQ(state_dim(cfg), 30);
  EXPECT_EQ(sa.raw, sb.raw);
  EXPECT_EQ(a.world().rates.total, 0.0);
  EXPECT_EQ(a.world().slot, 0);
  const Eigen::VectorXd n = sa.normalized();
  EXPECT_TRUE(n.allFinite());
  EXPECT_LE(n.maxCoeff(), 1.0);
  EXPECT_GE(n.minCoeff(), -1.0);
  // UAV block follows the users
  EXPECT_DOUBLE_EQ(sa.raw[18], 375.0);
  EXPECT_DOUBLE_EQ(sa.raw[20], 70.0);
  EXPECT_DOUBLE_EQ(sa.raw[27], 0.0);
}

TEST(Reset, RegionsRerandomizedPerEpisode) {
  ScenarioConfig cfg;
  Environment env(cfg, 8);
  env.reset();
  const auto first = env.world().regions;
  env.reset();
  EXPECT_NE(first[0].center, env.world().regions[0].center);
}

TEST(Kinematics, LevelFlightKeepsAltitude) {
  ScenarioConfig cfg;
  UavState u;
  u.position = {500.0, 500.0, 70.0};
  const auto r = apply_kinematics(u, {3.0, 1.0, std::numbers::pi / 2.0}, cfg);
  EXPECT_NEAR(r.uav.position.z(), 70.0, 1e-12);
  EXPECT_NEAR(r.uav.speed, 3.0, 1e-12);
}

TEST(Kinematics, AccelerationLimit) {
  ScenarioConfig cfg;
  UavState u;
  u.position = {500.0, 500.0, 70.0};
  const auto r = apply_kinematics(u, {20.0, 0.0, std::numbers::pi / 2.0}, cfg);
  EXPECT_NEAR(r.uav.speed, 5.0, 1e-12);
  EXPECT_TRUE(r.events.accel_limited);
  EXPECT_NEAR(r.acceleration.norm(), 5.0, 1e-12);
}

TEST(Kinematics, AltitudeClamp) {
  ScenarioConfig cfg;
  UavState u;
  u.position = {500.0, 500.0, 98.0};
  u.velocity = {0.0, 0.0, 10.0};
  u.speed = 10.0;
  const auto r = apply_kinematics(u, {10.0, 0.0, std::numbers::pi / 3.0 + 1e-9}, cfg);
  EXPECT_EQ(r.uav.position.z(), 100.0);
  EXPECT_TRUE(r.events.altitude_clamped);
  EXPECT_NEAR(r.uav.speed, r.uav.velocity.norm(), 1e-12);
}

TEST(Kinematics, AreaClampAndInvariants) {
  ScenarioConfig cfg;
  Rng rng(4);
  UavState u;
  u.position = {1495.0, 3.0, 41.0};
  for (int i = 0; i < 20000; ++i) {
    const MotionCommand c{uniform(rng, 0.0, cfg.v_max), uniform(rng, 0.0, 2 * std::numbers::pi),
                          uniform(rng, std::numbers::pi / 3, 2 * std::numbers::pi / 3)};
    const auto r = apply_kinematics(u, c, cfg);
    ASSERT_GE(r.uav.position.z(), cfg.h_min);
    ASSERT_LE(r.uav.position.z(), cfg.h_max);
    ASSERT_GE(r.uav.position.x(), 0.0);
    ASSERT_LE(r.uav.position.x(), cfg.area_x);
    ASSERT_GE(r.uav.position.y(), 0.0);
    ASSERT_LE(r.uav.position.y(), cfg.area_y);
    ASSERT_LE(r.uav.speed, cfg.v_max + 1e-9);
    ASSERT_LE(r.uav.speed, u.speed + cfg.a_max * cfg.slot_duration + 1e-9);
    ASSERT_NEAR(r.uav.speed, r.uav.velocity.norm(), 1e-9);
    ASSERT_LE(r.acceleration.norm(), cfg.a_max + 1e-9);
    u = r.uav;
  }
}

TEST(MapPower, Examples) {
  const double pmax = 1.0;
  const Eigen::VectorXd eq = map_power(Eigen::VectorXd::Constant(3, 0.7), pmax);
  for (int n = 0; n < 3; ++n) EXPECT_NEAR(eq[n], pmax / 3.0, 1e-15);
  Eigen::VectorXd big(3);
  big << 0.0, 800.0, 0.0;
  EXPECT_NEAR(map_power(big, pmax)[1], pmax, 1e-12);
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd z(3);
    for (int n = 0; n < 3; ++n) z[n] = uniform(rng, -20.0, 20.0);
    EXPECT_NEAR(map_power(z, pmax).sum(), pmax, 1e-9);
    const Eigen::VectorXd s = map_power(z, pmax, PowerMapping::Sigmoid);
    EXPECT_LE(s.sum(), pmax + 1e-12);
    EXPECT_GE(s.minCoeff(), 0.0);
  }
}

TEST(Step, ZeroPowerGivesZeroRate) {
  ScenarioConfig cfg;
  Environment env(cfg, 3);
  env.reset();
  std::vector<HybridAction> joint(3, idle_action(cfg));
  const StepOutcome o = env.step(joint);
  EXPECT_EQ(o.report.total, 0.0);
  EXPECT_EQ(o.reward, 0.0 - o.violations.penalty);
  EXPECT_EQ(o.violations.collision_pairs, 0);
}

TEST(Step, CollisionPenalty) {
  ScenarioConfig cfg;
  cfg.d_min_uav = 1000.0;  // every pair of the start formation is "too close"
  Environment env(cfg, 3);
  env.reset();
  std::vector<HybridAction> joint(3, idle_action(cfg));
  const StepOutcome o = env.step(joint);
  EXPECT_EQ(o.violations.collision_pairs, 3);
  EXPECT_DOUBLE_EQ(o.violations.penalty, 1.5);
  EXPECT_DOUBLE_EQ(o.reward, -1.5);
}

TEST(Step, MicroScenarioMatchesHandChain) {
  ScenarioConfig cfg;
  cfg.num_uavs = 1;
  cfg.num_users = 1;
  cfg.num_subcarriers = 1;
  cfg.obstruction.count = 0;
  const std::uint64_t seed = 77;
  Environment env(cfg, seed);
  env.reset();
  RandomStreams mirror(seed);
  const WorldState w0 = env.world();

  HybridAction a = idle_action(cfg, 4.0, 0.3, std::numbers::pi / 2.0);
  a.picks = {0};
  const StepOutcome o = env.step(std::vector<HybridAction>{a});

  // kinematics: from rest, speed 4 (< a_max * Ts), level flight
  const Eigen::Vector3d v = 4.0 * Eigen::Vector3d(std::cos(0.3), std::sin(0.3), 0.0);
  const Eigen::Vector3d q = w0.uavs[0].position + v;
  const Eigen::Vector2d u = w0.users[0].position;
  const double h = q.z();
  const double r = std::hypot(q.x() - u.x(), q.y() - u.y());
  const double d = std::sqrt(h * h + r * r);
  const double lh = std::log10(h), ld = std::log10(d);
  const double los = 30.9 + (22.25 - 0.5 * lh) * ld + 20.0 * std::log10(2.0);
  const double nlos = std::max(los, 32.4 + (43.2 - 7.6 * lh) * ld + 20.0 * std::log10(2.0));
  const double d0 = std::max(294.05 * lh - 432.94, 18.0), p1 = 233.98 * lh - 0.95;
  const double plos = r <= d0 ? 1.0 : std::clamp(d0 / r + std::exp(-r / p1 + d0 / p1), 0.0, 1.0);
  const double L = plos * los + (1.0 - plos) * nlos;
  const double fading = std::exponential_distribution<double>(1.0)(mirror(Stream::Fading));
  const double g = fading * std::pow(10.0, -L / 10.0);
  const double snr = cfg.p_max * g / cfg.noise_power;  // single channel gets the whole budget
  const double rate = cfg.subcarrier_bandwidth * std::log2(1.0 + snr);
  const Eigen::Vector3d acc = 4.0 * v.normalized();
  const double E = propulsion_energy(v, acc, cfg.aero, 1.0);
  const double eta = 1.0 * rate * 1.0 / E;  // one user: fairness 1

  EXPECT_NEAR(o.report.total, rate, 1e-9 * rate);
  EXPECT_NEAR(o.report.fairness, 1.0, 1e-15);
  EXPECT_NEAR(o.energy, E, 1e-9 * E);
  EXPECT_NEAR(o.efficiency, eta, 1e-9 * eta);
  EXPECT_NEAR(o.reward, eta / 1e3, 1e-9 * eta / 1e3);
}

TEST(Step, EpisodeTerminatesAndConstraintsHold) {
  ScenarioConfig cfg;
  Environment env(cfg, 12);
  env.reset();
  Rng rng(99);
  int steps = 0;
  while (!env.done()) {
    MaskState mask(cfg.num_users, cfg.num_uavs, cfg.num_subcarriers);
    std::vector<HybridAction> joint;
    for (int m = 0; m < cfg.num_uavs; ++m) {
      HybridAction a = idle_action(cfg, uniform(rng, 0.0, 20.0), uniform(rng, 0.0, 6.28),
                                   uniform(rng, std::numbers::pi / 3, 2 * std::numbers::pi / 3));
      for (int n = 0; n < cfg.num_subcarriers; ++n) {
        std::vector<int> options;
        for (int k = 0; k < cfg.num_users; ++k) {
          if (mask.is_valid(k, m, n)) options.push_back(k);
        }
        if (!options.empty()) {
          a.picks[n] = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
          mask.assign(a.picks[n], m, n);
        }
        a.power_logits[n] = uniform(rng, -3.0, 3.0);
      }
      joint.push_back(a);
    }
    const StepOutcome o = env.step(joint);
    ++steps;
    ASSERT_TRUE(o.next_state.raw.allFinite());
    ASSERT_TRUE(std::isfinite(o.reward));
    ASSERT_GE(o.energy, 0.0);
    for (const auto& u : env.world().uavs) {
      ASSERT_GE(u.position.z(), cfg.h_min);
      ASSERT_LE(u.position.z(), cfg.h_max);
      ASSERT_LE(u.speed, cfg.v_max + 1e-9);
    }
    for (int m = 0; m < cfg.num_uavs; ++m) ASSERT_LE(env.last_power().row(m).sum(), cfg.p_max * (1 + 1e-12));
    ASSERT_NEAR(o.reward, o.efficiency / 1e3 - o.violations.penalty, 1e-12);
  }
  EXPECT_EQ(steps, cfg.horizon);
  EXPECT_THROW(env.step(std::vector<HybridAction>(3, idle_action(cfg))), std::logic_error);
}

TEST(Step, MalformedJointActionRejected) {
  ScenarioConfig cfg;
  Environment env(cfg, 1);
  env.reset();
  EXPECT_THROW(env.step(std::vector<HybridAction>(2, idle_action(cfg))), std::invalid_argument);
  std::vector<HybridAction> dup(3, idle_action(cfg));
  dup[0].picks[0] = 4;
  dup[1].picks[2] = 4;  // same user on two UAVs
  EXPECT_THROW(env.step(dup), std::invalid_argument);
  std::vector<HybridAction> nan(3, idle_action(cfg));
  nan[2].motion.speed = std::nan("");
  EXPECT_THROW(env.step(nan), std::invalid_argument);
}

TEST(Step, EnergyUsesRealizedKinematics) {
  ScenarioConfig cfg;
  Environment env(cfg, 6);
  env.reset();
  const StepOutcome o = env.step(std::vector<HybridAction>(3, idle_action(cfg, 20.0, 0.0)));
  const double expected = propulsion_energy({5.0, 0.0, 0.0}, {5.0, 0.0, 0.0}, cfg.aero, 1.0);
  for (double e : o.uav_energy) EXPECT_NEAR(e, expected, 1e-9);
}

TEST(Trace, JsonRecordHasFields) {
  ScenarioConfig cfg;
  Environment env(cfg, 6);
  env.reset();
  const StepOutcome o = env.step(std::vector<HybridAction>(3, idle_action(cfg)));
  const auto j = step_trace_json(0, env.world(), env.last_assignment(), env.last_power(), o);
  for (const char* key : {"slot", "uav_positions", "assignments", "powers", "user_rates", "fairness", "energy", "reward"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["uav_positions"].size(), 3u);
}

#include <gtest/gtest.h>

#include <cmath>

#include "uavswarm/energy.hpp"
#include "uavswarm/metrics_io.hpp"
#include "uavswarm/rng.hpp"

using namespace uavswarm;

namespace {

Eigen::Vector3d random_ball(Rng& rng, double radius) {
  Eigen::Vector3d v;
  do {
    v = {uniform(rng, -radius, radius), uniform(rng, -radius, radius), uniform(rng, -radius, radius)};
  } while (v.norm() > radius);
  return v;
}

}  // namespace

TEST(Thrust, Hover) {
  const AeroParams aero;
  EXPECT_EQ(thrust(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), aero), 19.6);
}

TEST(Thrust, LevelFlightDrag) {
  const AeroParams aero;
  const double f = thrust({10.0, 0.0, 0.0}, Eigen::Vector3d::Zero(), aero);
  EXPECT_NEAR(f, std::sqrt(0.6125 * 0.6125 + 19.6 * 19.6), 1e-12);
  EXPECT_NEAR(f, 19.609567977138102, 1e-12);
}

TEST(Thrust, NoDragAtRest) {
  const AeroParams aero;
  const Eigen::Vector3d a(1.0, -2.0, 0.5);
  const Eigen::Vector3d expected = aero.mass * a + Eigen::Vector3d(0.0, 0.0, aero.mass * aero.g_mag);
  EXPECT_NEAR(thrust(Eigen::Vector3d::Zero(), a, aero), expected.norm(), 1e-12);
}

TEST(Energy, HoverOracle) {
  const AeroParams aero;
  EXPECT_NEAR(propulsion_energy(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), aero, 1.0), 70.560532426638, 1e-9);
  const PowerBreakdown p = propulsion_power(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), aero);
  EXPECT_GT(p.induced, p.blade_profile);
  EXPECT_EQ(p.climb, 0.0);
  EXPECT_EQ(p.parasite, 0.0);
}

TEST(Energy, LinearInSlotLength) {
  const AeroParams aero;
  const Eigen::Vector3d v(8.0, -3.0, 1.5), a(0.5, 1.0, -0.2);
  const double e1 = propulsion_energy(v, a, aero, 1.0);
  EXPECT_NEAR(propulsion_energy(v, a, aero, 2.0), 2.0 * e1, 1e-12);
  EXPECT_NEAR(propulsion_energy(v, a, aero, 0.5), 0.5 * e1, 1e-12);
}

TEST(Energy, LevelFlightHasNoClimbTerm) {
  const AeroParams aero;
  EXPECT_EQ(propulsion_power({12.0, 5.0, 0.0}, Eigen::Vector3d::Zero(), aero).climb, 0.0);
  EXPECT_NEAR(propulsion_power({0.0, 0.0, 2.0}, Eigen::Vector3d::Zero(), aero).climb, 2.0 * 9.8 * 2.0, 1e-12);
  // descending is not credited
  EXPECT_EQ(propulsion_power({0.0, 0.0, -10.0}, Eigen::Vector3d::Zero(), aero).climb, 0.0);
}

TEST(Energy, NonNegativeProperty) {
  const AeroParams aero;
  Rng rng(23);
  for (int i = 0; i < 100000; ++i) {
    ASSERT_GE(propulsion_energy(random_ball(rng, 20.0), random_ball(rng, 5.0), aero, 1.0), 0.0);
  }
}

TEST(Energy, SpeedBowl) {
  const AeroParams aero;
  const double hover = propulsion_energy(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), aero, 1.0);
  double best = hover;
  double best_v = 0.0;
  for (double s = 0.0; s <= 20.0; s += 0.25) {
    const double e = propulsion_energy({s, 0.0, 0.0}, Eigen::Vector3d::Zero(), aero, 1.0);
    if (e < best) {
      best = e;
      best_v = s;
    }
  }
  EXPECT_LT(best, hover);
  EXPECT_GT(best_v, 0.0);
  EXPECT_LT(best_v, 20.0);
  EXPECT_NEAR(propulsion_energy({10.0, 0.0, 0.0}, Eigen::Vector3d::Zero(), aero, 1.0), 28.90, 0.01);
  EXPECT_NEAR(propulsion_energy({20.0, 0.0, 0.0}, Eigen::Vector3d::Zero(), aero, 1.0), 61.90, 0.01);
}

TEST(Energy, VectorFile) {
  const AeroParams aero;
  const CsvTable t = read_csv(std::string(UAVSWARM_VECTORS) + "/energy.csv");
  ASSERT_EQ(t.rows.size(), 1000u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const Eigen::Vector3d v(t.number(i, "vx"), t.number(i, "vy"), t.number(i, "vz"));
    const Eigen::Vector3d a(t.number(i, "ax"), t.number(i, "ay"), t.number(i, "az"));
    const double want_f = t.number(i, "thrust"), want_e = t.number(i, "energy");
    ASSERT_LT(std::abs(thrust(v, a, aero) - want_f) / want_f, 1e-9) << "row " << i;
    ASSERT_LT(std::abs(propulsion_energy(v, a, aero, t.number(i, "Ts")) - want_e) / want_e, 1e-9) << "row " << i;
  }
}

TEST(SwarmEnergy, Sums) {
  EXPECT_EQ(swarm_energy(std::vector<double>{}), 0.0);
  EXPECT_DOUBLE_EQ(swarm_energy(std::vector<double>{5.0, 5.0, 5.0}), 15.0);
  EXPECT_DOUBLE_EQ(swarm_energy(std::vector<double>{1.5, 2.25, 70.0}), 73.75);
}

TEST(Efficiency, Examples) {
  EXPECT_DOUBLE_EQ(energy_efficiency(1.0, 250.0, 250.0, 1.0), 1.0);
  EXPECT_EQ(energy_efficiency(0.0, 1e4, 100.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(energy_efficiency(0.5, 1e4, 100.0, 2.0), 100.0);
  EXPECT_THROW(energy_efficiency(1.0, 1.0, 0.0, 1.0), std::domain_error);
}

TEST(Acceleration, AlongVelocity) {
  const Eigen::Vector3d a = along_velocity_acceleration({0.0, 0.0, 0.0}, {3.0, 4.0, 0.0}, 1.0, 5.0);
  EXPECT_NEAR(a.norm(), 5.0, 1e-12);
  EXPECT_NEAR(a.x(), 3.0, 1e-12);
  // turn at constant speed: no along-track acceleration
  EXPECT_NEAR(along_velocity_acceleration({5.0, 0.0, 0.0}, {0.0, 5.0, 0.0}, 1.0, 5.0).norm(), 0.0, 1e-12);
  // limited to a_max
  EXPECT_NEAR(along_velocity_acceleration({20.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 1.0, 5.0).x(), -5.0, 1e-12);
  EXPECT_EQ(along_velocity_acceleration({3.0, 0.0, 0.0}, Eigen::Vector3d::Zero(), 1.0, 5.0), Eigen::Vector3d::Zero());
}

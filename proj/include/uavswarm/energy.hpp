#ifndef UAVSWARM_ENERGY_HPP
#define UAVSWARM_ENERGY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

#include "uavswarm/config.hpp"

namespace uavswarm {

/// Rotor thrust magnitude |m'a + 0.5 rho S_FP |v| v - m' g| with g = (0, 0, -g_mag).
inline double thrust(const Eigen::Vector3d& v, const Eigen::Vector3d& a, const AeroParams& aero) {
  const Eigen::Vector3d gravity(0.0, 0.0, -aero.g_mag);
  const Eigen::Vector3d f = aero.mass * a + 0.5 * aero.rho * aero.plate_area * v.norm() * v - aero.mass * gravity;
  return f.norm();
}

/// Propulsion power split into its components, in watts.
struct PowerBreakdown {
  double blade_profile = 0.0;
  double climb = 0.0;
  double induced = 0.0;
  double parasite = 0.0;

  double total() const { return blade_profile + climb + induced + parasite; }
};

/// Instantaneous propulsion power for velocity v and along-velocity acceleration a.
///
/// The climb term is m'|g| |v| sin(tau_c) with sin(tau_c) taken from the
/// velocity's vertical component; descents are not credited (the term is
/// floored at zero), which keeps the total non-negative.
inline PowerBreakdown propulsion_power(const Eigen::Vector3d& v, const Eigen::Vector3d& a, const AeroParams& aero) {
  const double f = thrust(v, a, aero);
  const double s = v.norm();
  const double s2 = s * s;
  const double rho = aero.rho;
  const double area = aero.disc_area;

  PowerBreakdown p;
  p.blade_profile = aero.delta / 8.0 * (f / (aero.thrust_coeff * rho * area) + 3.0 * s2) *
                    std::sqrt(rho * aero.rotor_solidity * aero.rotor_solidity * area * f / aero.thrust_coeff);
  const double sin_climb = s > 0.0 ? std::max(v.z(), 0.0) / s : 0.0;
  p.climb = aero.mass * aero.g_mag * s * sin_climb;
  const double inner = std::sqrt(f * f / (4.0 * rho * rho * area * area) + s2 * s2 / 4.0) - s2 / 2.0;
  p.induced = (1.0 + aero.induced_corr) * f * std::sqrt(std::max(inner, 0.0));
  p.parasite = 0.5 * rho * aero.plate_area * s2 * s;
  return p;
}

/// Propulsion energy over one slot of length ts (joules).
inline double propulsion_energy(const Eigen::Vector3d& v, const Eigen::Vector3d& a, const AeroParams& aero,
                                double ts) {
  const double e = propulsion_power(v, a, aero).total() * ts;
  if (!(e >= 0.0)) throw NumericalFault("propulsion_energy: negative or non-finite energy");
  return e;
}

inline double swarm_energy(std::span<const double> per_uav) {
  return std::accumulate(per_uav.begin(), per_uav.end(), 0.0);
}

/// Fair bits delivered in the slot per joule of propulsion energy.
inline double energy_efficiency(double fairness, double total_rate, double energy, double ts) {
  if (!(energy > 0.0)) throw std::domain_error("energy_efficiency: energy must be > 0");
  return fairness * total_rate * ts / energy;
}

/// Along-velocity acceleration between two slots: the scalar speed change over
/// ts, pointed along the new heading, limited to |a| <= a_max.
inline Eigen::Vector3d along_velocity_acceleration(const Eigen::Vector3d& v_old, const Eigen::Vector3d& v_new,
                                                   double ts, double a_max) {
  const double s_new = v_new.norm();
  if (s_new <= 0.0) return Eigen::Vector3d::Zero();
  const double accel = std::clamp((s_new - v_old.norm()) / ts, -a_max, a_max);
  return accel * v_new / s_new;
}

}  // namespace uavswarm

#endif  // UAVSWARM_ENERGY_HPP

#ifndef UAVSWARM_CHANNEL_HPP
#define UAVSWARM_CHANNEL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavswarm/config.hpp"
#include "uavswarm/rng.hpp"
#include "uavswarm/world.hpp"

namespace uavswarm {

/// Thrown when link geometry or altitude is outside the validity range of the
/// path-loss model.
class ChannelDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Marker for "no user" in a per-subcarrier assignment.
inline constexpr int kNoUser = -1;

enum class LinkState { LoS, NLoS };

inline double distance_3d(const UavState& uav, const UserState& user) {
  const double dx = uav.position.x() - user.position.x();
  const double dy = uav.position.y() - user.position.y();
  const double h = uav.position.z();
  return std::sqrt(h * h + dx * dx + dy * dy);
}

namespace detail {

inline void check_link(double h, double d, double fc) {
  if (!(h > 0.0)) throw ChannelDomainError("altitude must be > 0, got " + std::to_string(h));
  if (!(fc > 0.0)) throw ChannelDomainError("carrier frequency must be > 0");
  // a few ulps of slack for d computed from h and a zero horizontal offset
  if (d < h * (1.0 - 1e-12)) {
    throw ChannelDomainError("3D distance " + std::to_string(d) + " is shorter than altitude " + std::to_string(h));
  }
}

}  // namespace detail

/// Path loss in dB. The NLoS branch is floored at the LoS value.
inline double pathloss(double h, double d, double fc, LinkState state) {
  detail::check_link(h, d, fc);
  const double lh = std::log10(h);
  const double ld = std::log10(d);
  const double lf = 20.0 * std::log10(fc);
  const double los = 30.9 + (22.25 - 0.5 * lh) * ld + lf;
  if (state == LinkState::LoS) return los;
  const double nlos = 32.4 + (43.2 - 7.6 * lh) * ld + lf;
  return std::max(los, nlos);
}

struct LosModelParams {
  double d0 = 0.0;  // m
  double p1 = 0.0;  // m
};

inline LosModelParams los_model_params(double h) {
  if (!(h > 0.0)) throw ChannelDomainError("altitude must be > 0");
  const double lh = std::log10(h);
  LosModelParams p{std::max(294.05 * lh - 432.94, 18.0), 233.98 * lh - 0.95};
  if (!(p.p1 > 0.0)) throw ChannelDomainError("altitude " + std::to_string(h) + " m is too low for the LoS model");
  return p;
}

/// LoS probability from altitude and 3D distance. The second branch can exceed
/// one as written, so the result is clamped to [0, 1].
inline double los_probability(double h, double d) {
  const LosModelParams p = los_model_params(h);
  if (d < h * (1.0 - 1e-12)) throw ChannelDomainError("3D distance shorter than altitude");
  const double r = std::sqrt(std::max(d * d - h * h, 0.0));
  if (r <= p.d0) return 1.0;
  const double prob = p.d0 / r + std::exp(-r / p.p1 + p.d0 / p.p1);
  return std::clamp(prob, 0.0, 1.0);
}

/// Probability-weighted path loss. An obstructed user is always NLoS.
inline double mean_pathloss(double h, double d, double fc, bool obstructed = false) {
  const double p_los = obstructed ? 0.0 : los_probability(h, d);
  return p_los * pathloss(h, d, fc, LinkState::LoS) + (1.0 - p_los) * pathloss(h, d, fc, LinkState::NLoS);
}

/// Power gain |g|^2 from the mean loss and a power-fading sample.
inline double channel_gain(double mean_loss_db, double fading) {
  if (fading < 0.0) throw std::invalid_argument("channel_gain: fading power must be >= 0");
  return fading * std::pow(10.0, -mean_loss_db / 10.0);
}

struct LinkGain {
  double gain = 0.0;           // |g|^2
  double mean_pathloss = 0.0;  // dB
  double los_prob = 0.0;
};

/// Link gains for every (uav, user) pair, row-major by uav.
class GainTable {
 public:
  GainTable() = default;
  GainTable(int uavs, int users) : uavs_(uavs), users_(users), links_(static_cast<std::size_t>(uavs * users)) {}

  int uavs() const { return uavs_; }
  int users() const { return users_; }
  LinkGain& at(int m, int k) { return links_[index(m, k)]; }
  const LinkGain& at(int m, int k) const { return links_[index(m, k)]; }
  double gain(int m, int k) const { return links_[index(m, k)].gain; }

 private:
  std::size_t index(int m, int k) const {
    if (m < 0 || m >= uavs_ || k < 0 || k >= users_) throw std::out_of_range("GainTable index");
    return static_cast<std::size_t>(m * users_ + k);
  }

  int uavs_ = 0;
  int users_ = 0;
  std::vector<LinkGain> links_;
};

/// Draws unit-mean exponential power fading (Rayleigh amplitude), one per
/// (uav, user) link and slot, and evaluates all link gains.
inline GainTable compute_gains(const WorldState& world, const ScenarioConfig& cfg, Rng& fading) {
  const int M = static_cast<int>(world.uavs.size());
  const int K = static_cast<int>(world.users.size());
  GainTable table(M, K);
  std::exponential_distribution<double> fade(1.0);
  for (int m = 0; m < M; ++m) {
    const double h = world.uavs[m].position.z();
    for (int k = 0; k < K; ++k) {
      const double d = distance_3d(world.uavs[m], world.users[k]);
      const bool obstructed = is_obstructed(world, static_cast<std::size_t>(k));
      LinkGain& link = table.at(m, k);
      link.los_prob = obstructed ? 0.0 : los_probability(h, d);
      link.mean_pathloss = mean_pathloss(h, d, cfg.carrier_freq, obstructed);
      link.gain = channel_gain(link.mean_pathloss, fade(fading));
    }
  }
  return table;
}

/// User-channel assignment and per-subcarrier transmit powers for one slot.
/// Construction enforces: one user per (uav, subcarrier); each user on at most
/// one (uav, subcarrier); powers >= 0 with per-UAV sum <= p_max (when given).
class AllocationDecision {
 public:
  AllocationDecision(int users, std::vector<std::vector<int>> picks, Eigen::MatrixXd power,
                     double p_max = std::numeric_limits<double>::infinity())
      : users_(users), picks_(std::move(picks)), power_(std::move(power)) {
    const int M = static_cast<int>(picks_.size());
    if (power_.rows() != M) throw std::invalid_argument("AllocationDecision: power rows != number of UAVs");
    std::vector<int> served(static_cast<std::size_t>(users_), 0);
    for (int m = 0; m < M; ++m) {
      if (static_cast<int>(picks_[m].size()) != power_.cols()) {
        throw std::invalid_argument("AllocationDecision: picks/power subcarrier count mismatch");
      }
      for (int k : picks_[m]) {
        if (k == kNoUser) continue;
        if (k < 0 || k >= users_) throw std::invalid_argument("AllocationDecision: user index out of range");
        if (++served[k] > 1) {
          throw std::invalid_argument("AllocationDecision: user " + std::to_string(k) + " assigned more than once");
        }
      }
      if ((power_.row(m).array() < 0.0).any()) throw std::invalid_argument("AllocationDecision: negative power");
      if (power_.row(m).sum() > p_max * (1.0 + 1e-12)) {
        throw std::invalid_argument("AllocationDecision: UAV " + std::to_string(m) + " exceeds p_max");
      }
    }
  }

  int users() const { return users_; }
  int uavs() const { return static_cast<int>(picks_.size()); }
  int subcarriers() const { return static_cast<int>(power_.cols()); }
  /// User served by uav m on subcarrier n, or kNoUser.
  int user_on(int m, int n) const { return picks_[m][n]; }
  bool phi(int k, int m, int n) const { return picks_[m][n] == k; }
  double power(int m, int n) const { return power_(m, n); }
  const Eigen::MatrixXd& powers() const { return power_; }
  const std::vector<std::vector<int>>& picks() const { return picks_; }

 private:
  int users_;
  std::vector<std::vector<int>> picks_;
  Eigen::MatrixXd power_;
};

/// SINR of user k served by uav m on subcarrier n; interference sums all other
/// UAVs' power on n.
inline double sinr(const AllocationDecision& alloc, const GainTable& gains, int k, int m, int n, double noise) {
  double interference = 0.0;
  for (int j = 0; j < alloc.uavs(); ++j) {
    if (j != m) interference += alloc.power(j, n) * gains.gain(j, k);
  }
  return alloc.power(m, n) * gains.gain(m, k) / (interference + noise);
}

/// Jain's index over rate ratios f_k = x_k / sum(x). All-zero input counts as
/// perfectly fair (every f_k = 1/K).
inline double jain_fairness(std::span<const double> cumulative) {
  const auto K = static_cast<double>(cumulative.size());
  if (cumulative.empty()) return 1.0;
  double total = 0.0;
  for (double x : cumulative) total += x;
  if (!(total > 0.0)) return 1.0;
  double sum = 0.0, sum_sq = 0.0;
  for (double x : cumulative) {
    const double f = x / total;
    sum += f;
    sum_sq += f * f;
  }
  return sum * sum / (K * sum_sq);
}

struct RateReport {
  std::vector<double> per_user;  // bit/s
  double total = 0.0;            // bit/s
  std::vector<double> ratios;    // f_k
  double fairness = 1.0;         // Jain index over cumulative rates
  double fair_rate = 0.0;        // fairness * total
};

/// Slot rates from an allocation; folds them into `acc` and reports fairness
/// over the updated cumulative rates.
inline RateReport rates_and_fairness(const AllocationDecision& alloc, const GainTable& gains, RateAccumulator& acc,
                                     double bandwidth, double noise) {
  const int K = alloc.users();
  RateReport rep;
  rep.per_user.assign(static_cast<std::size_t>(K), 0.0);
  for (int m = 0; m < alloc.uavs(); ++m) {
    for (int n = 0; n < alloc.subcarriers(); ++n) {
      const int k = alloc.user_on(m, n);
      if (k == kNoUser) continue;
      rep.per_user[k] += bandwidth * std::log2(1.0 + sinr(alloc, gains, k, m, n, noise));
    }
  }
  for (double r : rep.per_user) rep.total += r;
  acc.add(rep.per_user);
  rep.ratios.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) rep.ratios[k] = acc.total > 0.0 ? acc.per_user[k] / acc.total : 1.0 / K;
  rep.fairness = jain_fairness(acc.per_user);
  rep.fair_rate = rep.fairness * rep.total;
  return rep;
}

}  // namespace uavswarm

#endif  // UAVSWARM_CHANNEL_HPP

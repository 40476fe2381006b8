#ifndef UAVSWARM_MASKING_HPP
#define UAVSWARM_MASKING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavswarm/channel.hpp"
#include "uavswarm/rng.hpp"

namespace uavswarm {

/// A stored action that cannot have been produced under the masking rules.
class DataCorruption : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Triple {
  int k = 0;
  int m = 0;
  int n = 0;
  bool operator==(const Triple&) const = default;
};

/// Summary of a partial user-channel assignment, enough to decide which
/// (user, uav, subcarrier) triples are still admissible.
class MaskState {
 public:
  MaskState(int users, int uavs, int subcarriers)
      : K_(users),
        M_(uavs),
        N_(subcarriers),
        user_assigned_(static_cast<std::size_t>(users), 0),
        slot_used_(static_cast<std::size_t>(uavs * subcarriers), 0),
        uav_user_(static_cast<std::size_t>(users * uavs), 0),
        channel_count_(static_cast<std::size_t>(subcarriers), 0) {}

  /// Rebuilds the mask from per-UAV picks (outer index = uav; fewer rows than
  /// UAVs means the later UAVs have not picked yet).
  static MaskState from_picks(int users, int uavs, int subcarriers, const std::vector<std::vector<int>>& picks) {
    MaskState mask(users, uavs, subcarriers);
    for (int m = 0; m < static_cast<int>(picks.size()); ++m) {
      for (int n = 0; n < static_cast<int>(picks[m].size()); ++n) {
        if (picks[m][n] != kNoUser) mask.assign(picks[m][n], m, n);
      }
    }
    return mask;
  }

  int users() const { return K_; }
  int uavs() const { return M_; }
  int subcarriers() const { return N_; }

  bool user_assigned(int k) const { return user_assigned_[k] != 0; }
  bool slot_used(int m, int n) const { return slot_used_[m * N_ + n] != 0; }
  bool uav_serves(int k, int m) const { return uav_user_[k * M_ + m] != 0; }
  int channel_count(int n) const { return channel_count_[n]; }

  /// The four conjuncts: user unassigned anywhere; subcarrier used by fewer
  /// than M UAVs; user not already served by this UAV; (uav, subcarrier) free.
  bool is_valid(int k, int m, int n) const {
    return !user_assigned(k) && channel_count(n) < M_ && !uav_serves(k, m) && !slot_used(m, n);
  }

  void assign(int k, int m, int n) {
    if (k < 0 || k >= K_ || m < 0 || m >= M_ || n < 0 || n >= N_) {
      throw std::out_of_range("MaskState::assign: index out of range");
    }
    if (!is_valid(k, m, n)) {
      throw DataCorruption("MaskState::assign: (" + std::to_string(k) + "," + std::to_string(m) + "," +
                           std::to_string(n) + ") violates the assignment constraints");
    }
    user_assigned_[k] = 1;
    slot_used_[m * N_ + n] = 1;
    uav_user_[k * M_ + m] = 1;
    ++channel_count_[n];
  }

  bool operator==(const MaskState&) const = default;

 private:
  int K_, M_, N_;
  std::vector<std::uint8_t> user_assigned_;
  std::vector<std::uint8_t> slot_used_;
  std::vector<std::uint8_t> uav_user_;
  std::vector<int> channel_count_;
};

inline std::vector<Triple> valid_triples(const MaskState& mask) {
  std::vector<Triple> out;
  for (int k = 0; k < mask.users(); ++k) {
    for (int m = 0; m < mask.uavs(); ++m) {
      for (int n = 0; n < mask.subcarriers(); ++n) {
        if (mask.is_valid(k, m, n)) out.push_back({k, m, n});
      }
    }
  }
  return out;
}

struct MaskedProbabilities {
  std::vector<double> probs;  // zero outside the candidate set
  bool saturated = false;     // no candidates at all
};

/// Softmax restricted to `candidates` (same length as `logits`).
inline MaskedProbabilities masked_probabilities(std::span<const double> logits,
                                                std::span<const std::uint8_t> candidates) {
  if (logits.size() != candidates.size()) throw std::invalid_argument("masked_probabilities: size mismatch");
  MaskedProbabilities out;
  out.probs.assign(logits.size(), 0.0);
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (candidates[i]) {
      hi = std::max(hi, logits[i]);
      ++count;
    }
  }
  if (count == 0) {
    out.saturated = true;
    return out;
  }
  if (!std::isfinite(hi)) {
    // every candidate at -inf (or +inf): fall back to uniform
    for (std::size_t i = 0; i < logits.size(); ++i) out.probs[i] = candidates[i] ? 1.0 / count : 0.0;
    return out;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (candidates[i]) z += std::exp(logits[i] - hi);
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (candidates[i]) out.probs[i] = std::exp(logits[i] - hi) / z;
  }
  return out;
}

/// Flat index of z_{k,n} in a UAV's assignment-logit vector; the NONE logit sits last.
inline std::size_t assignment_logit_index(int k, int n, int subcarriers) {
  return static_cast<std::size_t>(k * subcarriers + n);
}
inline std::size_t none_logit_index(int users, int subcarriers) {
  return static_cast<std::size_t>(users * subcarriers);
}
inline std::size_t assignment_logit_count(int users, int subcarriers) {
  return static_cast<std::size_t>(users * subcarriers + 1);
}

/// Categorical over the admissible users for one (uav, subcarrier) pick, plus NONE.
struct PickDistribution {
  std::vector<int> options;  // user indices, kNoUser last
  std::vector<std::size_t> logit_index;
  std::vector<double> probs;
  double entropy = 0.0;

  int option_position(int user) const {
    auto it = std::find(options.begin(), options.end(), user);
    return it == options.end() ? -1 : static_cast<int>(it - options.begin());
  }
};

inline PickDistribution pick_distribution(std::span<const double> logits, const MaskState& mask, int m, int n) {
  const int K = mask.users();
  const int N = mask.subcarriers();
  if (logits.size() != assignment_logit_count(K, N)) throw std::invalid_argument("pick_distribution: bad logit count");
  PickDistribution d;
  std::vector<double> z;
  for (int k = 0; k < K; ++k) {
    if (mask.is_valid(k, m, n)) {
      d.options.push_back(k);
      d.logit_index.push_back(assignment_logit_index(k, n, N));
    }
  }
  d.options.push_back(kNoUser);
  d.logit_index.push_back(none_logit_index(K, N));
  for (std::size_t idx : d.logit_index) z.push_back(logits[idx]);
  const std::vector<std::uint8_t> all(z.size(), 1);
  d.probs = masked_probabilities(z, all).probs;
  for (double p : d.probs) {
    if (p > 0.0) d.entropy -= p * std::log(p);
  }
  return d;
}

struct AssignmentSample {
  std::vector<int> picks;  // per subcarrier: user index or kNoUser
  double log_prob = 0.0;
  double entropy = 0.0;  // sum of per-pick entropies
};

/// Samples UAV m's subcarrier picks in ascending subcarrier order, re-masking
/// after each pick. With `rng == nullptr` the most probable option is taken.
inline AssignmentSample sample_uav_assignment(std::span<const double> logits, MaskState& mask, int m, Rng* rng) {
  AssignmentSample out;
  for (int n = 0; n < mask.subcarriers(); ++n) {
    const PickDistribution d = pick_distribution(logits, mask, m, n);
    std::size_t choice = 0;
    if (rng != nullptr) {
      std::discrete_distribution<std::size_t> cat(d.probs.begin(), d.probs.end());
      choice = cat(*rng);
    } else {
      choice = static_cast<std::size_t>(std::max_element(d.probs.begin(), d.probs.end()) - d.probs.begin());
    }
    const int k = d.options[choice];
    out.picks.push_back(k);
    out.log_prob += std::log(d.probs[choice]);
    out.entropy += d.entropy;
    if (k != kNoUser) mask.assign(k, m, n);
  }
  return out;
}

struct JointAssignment {
  std::vector<std::vector<int>> picks;
  std::vector<double> log_probs;  // per UAV
  double log_prob = 0.0;
};

/// Samples the whole swarm's assignment, UAVs in index order.
inline JointAssignment sample_assignment(const std::vector<std::vector<double>>& per_uav_logits, MaskState& mask,
                                         Rng* rng) {
  JointAssignment out;
  for (int m = 0; m < static_cast<int>(per_uav_logits.size()); ++m) {
    AssignmentSample s = sample_uav_assignment(per_uav_logits[m], mask, m, rng);
    out.picks.push_back(std::move(s.picks));
    out.log_probs.push_back(s.log_prob);
    out.log_prob += s.log_prob;
  }
  return out;
}

struct AssignmentEvaluation {
  double log_prob = 0.0;
  double entropy = 0.0;
};

/// Log-probability and entropy of stored picks for UAV m under `logits`, with
/// `mask` advanced past them. When `grad` is non-empty it receives
/// d(w_logp * log_prob + w_entropy * entropy)/d(logits).
inline AssignmentEvaluation evaluate_uav_assignment(std::span<const double> logits, MaskState& mask, int m,
                                                    std::span<const int> picks, std::span<double> grad = {},
                                                    double w_logp = 0.0, double w_entropy = 0.0) {
  if (static_cast<int>(picks.size()) != mask.subcarriers()) throw DataCorruption("stored picks: wrong subcarrier count");
  AssignmentEvaluation out;
  for (int n = 0; n < mask.subcarriers(); ++n) {
    const PickDistribution d = pick_distribution(logits, mask, m, n);
    const int pos = d.option_position(picks[n]);
    if (pos < 0) {
      throw DataCorruption("stored pick (user " + std::to_string(picks[n]) + ", uav " + std::to_string(m) +
                           ", subcarrier " + std::to_string(n) + ") is invalid under the stored mask");
    }
    out.log_prob += std::log(d.probs[pos]);
    out.entropy += d.entropy;
    if (!grad.empty()) {
      for (std::size_t c = 0; c < d.options.size(); ++c) {
        const double p = d.probs[c];
        const double dlogp = (static_cast<int>(c) == pos ? 1.0 : 0.0) - p;
        const double dent = p > 0.0 ? -p * (std::log(p) + d.entropy) : 0.0;
        grad[d.logit_index[c]] += w_logp * dlogp + w_entropy * dent;
      }
    }
    if (picks[n] != kNoUser) mask.assign(picks[n], m, n);
  }
  return out;
}

}  // namespace uavswarm

#endif  // UAVSWARM_MASKING_HPP

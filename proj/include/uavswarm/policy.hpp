#ifndef UAVSWARM_POLICY_HPP
#define UAVSWARM_POLICY_HPP

#include <Eigen/Dense>
#include <boost/crc.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavswarm/config.hpp"
#include "uavswarm/env.hpp"
#include "uavswarm/masking.hpp"
#include "uavswarm/nn.hpp"
#include "uavswarm/rng.hpp"

namespace uavswarm {

enum class ActorHead : int { Assignment = 0, Power, Speed, Azimuth, Polar };
inline constexpr int kHeadCount = 5;

/// Continuous means are kMeanBound * tanh(head output) in pre-squash space.
inline constexpr double kMeanBound = 3.0;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct ActorShape {
  int input_dim = 0;
  std::vector<int> trunk{256, 128};
  int head_hidden = 64;
  int users = 0;
  int subcarriers = 0;

  /// Assignment: K*N logits + NONE. Power: N means + N log-std. Motion heads: mean + log-std.
  std::array<int, kHeadCount> head_outputs() const {
    return {users * subcarriers + 1, 2 * subcarriers, 2, 2, 2};
  }
  /// Number of Gaussian action dimensions: N power logits + speed + azimuth + polar.
  int continuous_dim() const { return subcarriers + 3; }
};

using HeadOutputs = std::array<Eigen::VectorXd, kHeadCount>;
using HeadBatch = std::array<Eigen::MatrixXd, kHeadCount>;

struct GaussianSlot {
  ActorHead head;
  int mean_row;
  int log_std_row;
};

/// Gaussian dimensions in raw-action order: power logits, speed, azimuth, polar.
inline std::vector<GaussianSlot> gaussian_slots(int subcarriers) {
  std::vector<GaussianSlot> slots;
  for (int n = 0; n < subcarriers; ++n) slots.push_back({ActorHead::Power, n, subcarriers + n});
  slots.push_back({ActorHead::Speed, 0, 1});
  slots.push_back({ActorHead::Azimuth, 0, 1});
  slots.push_back({ActorHead::Polar, 0, 1});
  return slots;
}

/// Shared trunk followed by five two-layer branches.
class Actor {
 public:
  explicit Actor(ActorShape shape) : shape_(std::move(shape)) {
    std::vector<int> trunk_sizes{shape_.input_dim};
    trunk_sizes.insert(trunk_sizes.end(), shape_.trunk.begin(), shape_.trunk.end());
    trunk_ = nn::Mlp(trunk_sizes, /*relu_output=*/true);
    const auto outs = shape_.head_outputs();
    for (int h = 0; h < kHeadCount; ++h) {
      heads_[h] = nn::Mlp({shape_.trunk.back(), shape_.head_hidden, outs[h]}, /*relu_output=*/false);
    }
  }

  /// `log_std0` seeds the bias of every log-std output.
  void init(Rng& rng, double log_std0 = 0.0) {
    trunk_.init(std::sqrt(2.0), std::sqrt(2.0), rng);
    for (auto& h : heads_) h.init(std::sqrt(2.0), 0.01, rng);
    for (const auto& slot : gaussian_slots(shape_.subcarriers)) {
      heads_[static_cast<int>(slot.head)].layers().back().bias(slot.log_std_row) = log_std0;
    }
  }

  HeadOutputs infer(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd features = trunk_.infer(x);
    HeadOutputs out;
    for (int h = 0; h < kHeadCount; ++h) out[h] = heads_[h].infer(features).col(0);
    return out;
  }

  HeadBatch forward(const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd& features = trunk_.forward(x);
    HeadBatch out;
    for (int h = 0; h < kHeadCount; ++h) out[h] = heads_[h].forward(features);
    return out;
  }

  void backward(const HeadBatch& grads) {
    Eigen::MatrixXd g = heads_[0].backward(grads[0]);
    for (int h = 1; h < kHeadCount; ++h) g += heads_[h].backward(grads[h]);
    trunk_.backward(g);
  }

  void zero_grad() {
    trunk_.zero_grad();
    for (auto& h : heads_) h.zero_grad();
  }

  std::vector<nn::ParamBlock> params() {
    std::vector<nn::ParamBlock> out;
    trunk_.append_params(out);
    for (auto& h : heads_) h.append_params(out);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = trunk_.parameter_count();
    for (const auto& h : heads_) n += h.parameter_count();
    return n;
  }

  const ActorShape& shape() const { return shape_; }
  nn::Mlp& trunk() { return trunk_; }
  const nn::Mlp& trunk() const { return trunk_; }
  nn::Mlp& head(ActorHead h) { return heads_[static_cast<int>(h)]; }
  const nn::Mlp& head(ActorHead h) const { return heads_[static_cast<int>(h)]; }

 private:
  ActorShape shape_;
  nn::Mlp trunk_;
  std::array<nn::Mlp, kHeadCount> heads_;
};

/// State-value network.
class Critic {
 public:
  Critic() = default;
  Critic(int input_dim, const std::vector<int>& hidden) {
    std::vector<int> sizes{input_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    net_ = nn::Mlp(sizes, false);
  }

  void init(Rng& rng) { net_.init(std::sqrt(2.0), 1.0, rng); }
  double infer(const Eigen::VectorXd& x) const { return net_.infer(x)(0, 0); }
  Eigen::RowVectorXd forward(const Eigen::MatrixXd& x) { return net_.forward(x).row(0); }
  void backward(const Eigen::RowVectorXd& grad) { net_.backward(grad); }
  void zero_grad() { net_.zero_grad(); }
  std::vector<nn::ParamBlock> params() {
    std::vector<nn::ParamBlock> out;
    net_.append_params(out);
    return out;
  }
  std::size_t parameter_count() const { return net_.parameter_count(); }
  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }

 private:
  nn::Mlp net_;
};

// ---------------------------------------------------------------------------
// Hybrid action distribution

struct Gaussian {
  double mean = 0.0;
  double log_std = 0.0;
};

inline Gaussian gaussian_from_outputs(double mean_out, double log_std_out) {
  return {kMeanBound * std::tanh(mean_out), std::clamp(log_std_out, kLogStdMin, kLogStdMax)};
}

inline double gaussian_log_prob(double x, const Gaussian& g) {
  const double z = (x - g.mean) * std::exp(-g.log_std);
  return -0.5 * z * z - g.log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double gaussian_entropy(const Gaussian& g) {
  return g.log_std + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Maps a pre-squash value into the open interval (lo, hi).
inline double squash(double raw, double lo, double hi) { return lo + (hi - lo) * sigmoid(raw); }

/// One agent's sampled action in distribution space.
struct AgentAction {
  std::vector<int> picks;  // per subcarrier
  Eigen::VectorXd raw;     // pre-squash Gaussian samples, gaussian_slots order
};

inline HybridAction to_hybrid_action(const AgentAction& a, const ScenarioConfig& cfg) {
  const int N = cfg.num_subcarriers;
  HybridAction h;
  h.picks = a.picks;
  h.power_logits = a.raw.head(N);
  h.motion.speed = squash(a.raw[N], 0.0, cfg.v_max);
  h.motion.azimuth = squash(a.raw[N + 1], 0.0, 2.0 * std::numbers::pi);
  h.motion.polar = squash(a.raw[N + 2], std::numbers::pi / 3.0, 2.0 * std::numbers::pi / 3.0);
  return h;
}

struct PolicySample {
  AgentAction action;
  double log_prob = 0.0;
  double entropy = 0.0;
};

/// Samples agent m's hybrid action. The assignment is drawn through the mask
/// (which is advanced); log-probability and entropy are in pre-squash space.
/// `rng == nullptr` gives the greedy action (argmax picks, Gaussian means).
inline PolicySample sample_and_logprob(const HeadOutputs& heads, MaskState& mask, int m, Rng* rng) {
  const int N = mask.subcarriers();
  PolicySample out;
  const Eigen::VectorXd& logits = heads[static_cast<int>(ActorHead::Assignment)];
  AssignmentSample assign =
      sample_uav_assignment(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())), mask, m, rng);
  out.action.picks = std::move(assign.picks);
  out.log_prob = assign.log_prob;
  out.entropy = assign.entropy;

  const auto slots = gaussian_slots(N);
  out.action.raw.resize(static_cast<Eigen::Index>(slots.size()));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Eigen::VectorXd& h = heads[static_cast<int>(slots[i].head)];
    const Gaussian g = gaussian_from_outputs(h[slots[i].mean_row], h[slots[i].log_std_row]);
    const double x = rng != nullptr ? g.mean + std::exp(g.log_std) * standard_normal(*rng) : g.mean;
    out.action.raw[static_cast<Eigen::Index>(i)] = x;
    out.log_prob += gaussian_log_prob(x, g);
    out.entropy += gaussian_entropy(g);
  }
  return out;
}

struct PolicyEvaluation {
  double log_prob = 0.0;
  double entropy = 0.0;
};

/// Log-probability and entropy of a stored action for agent m; the mask must
/// be the one the agent saw when sampling and is advanced past its picks.
/// When `grad` is given, d(w_logp * log_prob + w_entropy * entropy)/d(head
/// outputs) is added into it.
inline PolicyEvaluation evaluate_logprob(const HeadOutputs& heads, MaskState& mask, int m, const AgentAction& action,
                                         HeadOutputs* grad = nullptr, double w_logp = 0.0, double w_entropy = 0.0) {
  const int N = mask.subcarriers();
  const auto slots = gaussian_slots(N);
  if (action.raw.size() != static_cast<Eigen::Index>(slots.size())) throw DataCorruption("stored action: wrong raw size");
  PolicyEvaluation out;

  const Eigen::VectorXd& logits = heads[static_cast<int>(ActorHead::Assignment)];
  std::span<double> assign_grad;
  if (grad != nullptr) {
    Eigen::VectorXd& g = (*grad)[static_cast<int>(ActorHead::Assignment)];
    assign_grad = std::span<double>(g.data(), static_cast<std::size_t>(g.size()));
  }
  const AssignmentEvaluation ae = evaluate_uav_assignment(
      std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())), mask, m, action.picks,
      assign_grad, w_logp, w_entropy);
  out.log_prob = ae.log_prob;
  out.entropy = ae.entropy;

  for (std::size_t i = 0; i < slots.size(); ++i) {
    const int head = static_cast<int>(slots[i].head);
    const Eigen::VectorXd& h = heads[head];
    const double mean_out = h[slots[i].mean_row];
    const double ls_out = h[slots[i].log_std_row];
    const Gaussian g = gaussian_from_outputs(mean_out, ls_out);
    const double x = action.raw[static_cast<Eigen::Index>(i)];
    out.log_prob += gaussian_log_prob(x, g);
    out.entropy += gaussian_entropy(g);
    if (grad != nullptr) {
      const double inv_var = std::exp(-2.0 * g.log_std);
      const double diff = x - g.mean;
      const double t = std::tanh(mean_out);
      const double dmean_dout = kMeanBound * (1.0 - t * t);
      const bool ls_active = ls_out > kLogStdMin && ls_out < kLogStdMax;
      const double dlogp_dmean = diff * inv_var;
      const double dlogp_dls = diff * diff * inv_var - 1.0;
      Eigen::VectorXd& gh = (*grad)[head];
      gh[slots[i].mean_row] += w_logp * dlogp_dmean * dmean_dout;
      if (ls_active) gh[slots[i].log_std_row] += w_logp * dlogp_dls + w_entropy * 1.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Actor set + critic

enum class ActorSharing : std::uint32_t { PerAgent = 0, Shared = 1 };

/// All trainable networks of a run. With `Shared`, one actor serves every
/// agent and sees a one-hot agent id appended to the state.
class PolicySet {
 public:
  PolicySet(ActorSharing sharing, int state_dim, int agents, int users, int subcarriers, std::vector<int> trunk,
            int head_hidden, std::vector<int> critic_hidden)
      : sharing_(sharing), state_dim_(state_dim), agents_(agents), critic_hidden_(std::move(critic_hidden)) {
    ActorShape shape;
    shape.input_dim = state_dim + (sharing == ActorSharing::Shared ? agents : 0);
    shape.trunk = std::move(trunk);
    shape.head_hidden = head_hidden;
    shape.users = users;
    shape.subcarriers = subcarriers;
    const int count = sharing == ActorSharing::Shared ? 1 : agents;
    for (int i = 0; i < count; ++i) actors_.emplace_back(shape);
    critic_ = Critic(state_dim, critic_hidden_);
  }

  PolicySet(ActorSharing sharing, const ScenarioConfig& scenario, const TrainConfig& train)
      : PolicySet(sharing, uavswarm::state_dim(scenario), scenario.num_uavs, scenario.num_users, scenario.num_subcarriers,
                  train.actor_trunk, train.head_hidden, train.critic_hidden) {}

  void init(std::uint64_t seed, double log_std0 = 0.0) {
    Rng rng = make_rng(seed, 0x1417u);
    for (auto& a : actors_) a.init(rng, log_std0);
    critic_.init(rng);
  }

  ActorSharing sharing() const { return sharing_; }
  int agents() const { return agents_; }
  int state_dim() const { return state_dim_; }
  const std::vector<int>& critic_hidden() const { return critic_hidden_; }
  const ActorShape& actor_shape() const { return actors_.front().shape(); }

  std::vector<Actor>& actors() { return actors_; }
  const std::vector<Actor>& actors() const { return actors_; }
  Actor& actor_for(int m) { return actors_[sharing_ == ActorSharing::Shared ? 0 : m]; }
  const Actor& actor_for(int m) const { return actors_[sharing_ == ActorSharing::Shared ? 0 : m]; }
  Critic& critic() { return critic_; }
  const Critic& critic() const { return critic_; }

  Eigen::VectorXd actor_input(const Eigen::VectorXd& state, int m) const {
    if (sharing_ == ActorSharing::PerAgent) return state;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(state.size() + agents_);
    x.head(state.size()) = state;
    x[state.size() + m] = 1.0;
    return x;
  }

  /// Column-batched variant of actor_input.
  Eigen::MatrixXd actor_inputs(const Eigen::MatrixXd& states, int m) const {
    if (sharing_ == ActorSharing::PerAgent) return states;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(states.rows() + agents_, states.cols());
    x.topRows(states.rows()) = states;
    x.row(states.rows() + m).setOnes();
    return x;
  }

  std::size_t actor_parameter_count() const {
    std::size_t n = 0;
    for (const auto& a : actors_) n += a.parameter_count();
    return n;
  }

 private:
  ActorSharing sharing_;
  int state_dim_;
  int agents_;
  std::vector<int> critic_hidden_;
  std::vector<Actor> actors_;
  Critic critic_;
};

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (all integers and floats little-endian):
//   "UAVSWCKP"            8 bytes magic
//   u32 version
//   u32 sharing, agents, state_dim, users, subcarriers, head_hidden
//   u32 trunk_count, u32 trunk[trunk_count]
//   u32 critic_count, u32 critic[critic_count]
//   u64 parameter_count
//   f64 parameters: each actor (trunk then heads, per layer weight
//                   column-major then bias), then the critic
//   u32 CRC-32 of every preceding byte

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'U', 'A', 'V', 'S', 'W', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    if (pos_ + sizeof(U) > data_.size()) throw CheckpointError("checkpoint is truncated");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::size_t position() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

template <typename F>
void for_each_mlp_value(const nn::Mlp& mlp, F&& f) {
  for (const auto& l : mlp.layers()) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) f(l.weight.data()[i]);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) f(l.bias.data()[i]);
  }
}

template <typename F>
void for_each_value(const PolicySet& p, F&& f) {
  for (const auto& a : p.actors()) {
    for_each_mlp_value(a.trunk(), f);
    for (int h = 0; h < kHeadCount; ++h) for_each_mlp_value(a.head(static_cast<ActorHead>(h)), f);
  }
  for_each_mlp_value(p.critic().net(), f);
}

inline std::uint32_t crc32(std::string_view bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

}  // namespace detail

inline std::string encode_checkpoint(const PolicySet& policy) {
  std::string buf(kCheckpointMagic, sizeof(kCheckpointMagic));
  const ActorShape& shape = policy.actor_shape();
  detail::put_le<std::uint32_t>(buf, kCheckpointVersion);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(policy.sharing()));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(policy.agents()));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(policy.state_dim()));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(shape.users));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(shape.subcarriers));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(shape.head_hidden));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(shape.trunk.size()));
  for (int w : shape.trunk) detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(w));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(policy.critic_hidden().size()));
  for (int w : policy.critic_hidden()) detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(w));
  std::uint64_t count = 0;
  detail::for_each_value(policy, [&](double) { ++count; });
  detail::put_le<std::uint64_t>(buf, count);
  detail::for_each_value(policy, [&](double v) { detail::put_le<double>(buf, v); });
  detail::put_le<std::uint32_t>(buf, detail::crc32(buf));
  return buf;
}

inline PolicySet decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) + 8 ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  detail::ByteReader tail(bytes.substr(bytes.size() - 4));
  detail::ByteReader r(body.substr(sizeof(kCheckpointMagic)));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  if (tail.get<std::uint32_t>() != detail::crc32(body)) throw CheckpointError("checkpoint checksum mismatch");

  const auto sharing = r.get<std::uint32_t>();
  if (sharing > 1) throw CheckpointError("checkpoint has an unknown actor sharing mode");
  const auto agents = static_cast<int>(r.get<std::uint32_t>());
  const auto sdim = static_cast<int>(r.get<std::uint32_t>());
  const auto users = static_cast<int>(r.get<std::uint32_t>());
  const auto subcarriers = static_cast<int>(r.get<std::uint32_t>());
  const auto head_hidden = static_cast<int>(r.get<std::uint32_t>());
  std::vector<int> trunk(r.get<std::uint32_t>());
  if (trunk.size() > 64) throw CheckpointError("checkpoint architecture descriptor is implausible");
  for (int& w : trunk) w = static_cast<int>(r.get<std::uint32_t>());
  std::vector<int> critic(r.get<std::uint32_t>());
  if (critic.size() > 64) throw CheckpointError("checkpoint architecture descriptor is implausible");
  for (int& w : critic) w = static_cast<int>(r.get<std::uint32_t>());

  PolicySet policy(static_cast<ActorSharing>(sharing), sdim, agents, users, subcarriers, trunk, head_hidden, critic);
  std::uint64_t expected = 0;
  detail::for_each_value(policy, [&](double) { ++expected; });
  if (r.get<std::uint64_t>() != expected) throw CheckpointError("checkpoint parameter count does not match its architecture");

  auto fill = [&r](nn::Mlp& mlp) {
    for (auto& l : mlp.layers()) {
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = r.get<double>();
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = r.get<double>();
    }
  };
  for (auto& a : policy.actors()) {
    fill(a.trunk());
    for (int h = 0; h < kHeadCount; ++h) fill(a.head(static_cast<ActorHead>(h)));
  }
  fill(policy.critic().net());
  if (r.position() != body.size() - sizeof(kCheckpointMagic)) throw CheckpointError("checkpoint has trailing bytes");
  return policy;
}

inline void save_checkpoint(const PolicySet& policy, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(policy);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

inline PolicySet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace uavswarm

#endif  // UAVSWARM_POLICY_HPP

#ifndef UAVSWARM_TRAINER_HPP
#define UAVSWARM_TRAINER_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "uavswarm/config.hpp"
#include "uavswarm/env.hpp"
#include "uavswarm/masking.hpp"
#include "uavswarm/nn.hpp"
#include "uavswarm/policy.hpp"
#include "uavswarm/rng.hpp"

namespace uavswarm {

/// One slot of experience for the whole swarm.
struct Transition {
  Eigen::VectorXd state;       // normalized s_t
  Eigen::VectorXd next_state;  // normalized s_{t+1}
  std::vector<AgentAction> actions;  // per agent, in masking order
  std::vector<double> log_probs;     // per agent, under the collecting policy
  double value = 0.0;                // critic(s_t) at collection time
  double reward = 0.0;
  bool done = false;       // last slot of an episode
  double bootstrap = 0.0;  // critic(s_{t+1}) when this slot ends a truncated segment
};

/// Transitions from one update phase. Each segment is a contiguous run from a
/// single worker; a segment's final transition is either terminal or is
/// bootstrapped from its stored value.
struct RolloutBuffer {
  std::vector<Transition> transitions;
  std::vector<std::size_t> segment_ends;  // exclusive end index of each segment
  std::vector<double> returns;
  std::vector<double> advantages;

  std::size_t size() const { return transitions.size(); }
  void clear() {
    transitions.clear();
    segment_ends.clear();
    returns.clear();
    advantages.clear();
  }
};

/// Discounted reward-to-go, restarting after every done flag. An unfinished
/// tail is closed with gamma^k * bootstrap.
inline std::vector<double> compute_returns(std::span<const double> rewards, std::span<const std::uint8_t> dones,
                                           double gamma, double bootstrap = 0.0) {
  if (rewards.size() != dones.size()) throw std::invalid_argument("compute_returns: length mismatch");
  std::vector<double> out(rewards.size());
  double running = bootstrap;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    if (dones[t]) running = 0.0;
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

/// Generalized advantage estimate by backward recursion. `values` are V(s_t);
/// the value after the last slot is `bootstrap` unless that slot is done.
/// With `paper_returns`, the TD error subtracts the empirical return at s_t
/// instead of V(s_t).
inline std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                       std::span<const std::uint8_t> dones, double gamma, double lambda,
                                       double bootstrap = 0.0, std::span<const double> paper_returns = {}) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw std::invalid_argument("compute_gae: length mismatch");
  if (!paper_returns.empty() && paper_returns.size() != n) throw std::invalid_argument("compute_gae: length mismatch");
  std::vector<double> adv(n);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = dones[t] ? 0.0 : (t + 1 < n ? values[t + 1] : bootstrap);
    const double baseline = paper_returns.empty() ? values[t] : paper_returns[t];
    const double delta = rewards[t] + gamma * next_value - baseline;
    if (dones[t]) running = 0.0;
    running = delta + gamma * lambda * running;
    adv[t] = running;
  }
  return adv;
}

/// Fills buffer.returns and buffer.advantages segment by segment.
inline void compute_targets(RolloutBuffer& buffer, const TrainConfig& cfg) {
  buffer.returns.assign(buffer.size(), 0.0);
  buffer.advantages.assign(buffer.size(), 0.0);
  std::size_t begin = 0;
  for (std::size_t end : buffer.segment_ends) {
    std::vector<double> r, v;
    std::vector<std::uint8_t> d;
    for (std::size_t i = begin; i < end; ++i) {
      r.push_back(buffer.transitions[i].reward);
      v.push_back(buffer.transitions[i].value);
      d.push_back(buffer.transitions[i].done ? 1 : 0);
    }
    const double boot = end > begin ? buffer.transitions[end - 1].bootstrap : 0.0;
    const auto ret = compute_returns(r, d, cfg.gamma, boot);
    const auto adv = cfg.gae_paper_form ? compute_gae(r, v, d, cfg.gamma, cfg.gae_lambda, boot, ret)
                                        : compute_gae(r, v, d, cfg.gamma, cfg.gae_lambda, boot);
    std::copy(ret.begin(), ret.end(), buffer.returns.begin() + static_cast<std::ptrdiff_t>(begin));
    std::copy(adv.begin(), adv.end(), buffer.advantages.begin() + static_cast<std::ptrdiff_t>(begin));
    begin = end;
  }
  if (begin != buffer.size()) throw std::logic_error("compute_targets: segments do not cover the buffer");
}

/// Shifts and scales to mean 0, std 1 (left unchanged when the spread is ~0).
inline void normalize_in_place(std::vector<double>& x) {
  if (x.empty()) return;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(x.size()));
  for (double& v : x) v = (v - mean) / (sd + 1e-8);
}

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d values
};

/// Mean squared error, or the plain Euclidean norm of the residual when `l2_norm`.
inline LossAndGrad critic_loss(std::span<const double> values, std::span<const double> returns, bool l2_norm = false) {
  if (values.size() != returns.size()) throw std::invalid_argument("critic_loss: length mismatch");
  LossAndGrad out;
  out.grad.assign(values.size(), 0.0);
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) ss += (values[i] - returns[i]) * (values[i] - returns[i]);
  if (l2_norm) {
    out.loss = std::sqrt(ss);
    if (out.loss > 0.0) {
      for (std::size_t i = 0; i < values.size(); ++i) out.grad[i] = (values[i] - returns[i]) / out.loss;
    }
  } else {
    out.loss = ss / n;
    for (std::size_t i = 0; i < values.size(); ++i) out.grad[i] = 2.0 * (values[i] - returns[i]) / n;
  }
  return out;
}

/// min(r A, clip(r, 1-eps, 1+eps) A) for one sample, plus d/d(log r).
struct SurrogateTerm {
  double value = 0.0;
  double dlogp = 0.0;
  bool clipped = false;  // the clipped branch is the active minimum
};

inline SurrogateTerm clipped_surrogate(double ratio, double advantage, double eps) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage;
  SurrogateTerm s;
  if (unclipped <= clipped) {
    s.value = unclipped;
    s.dlogp = unclipped;  // d(r A)/d(log r) = r A
  } else {
    s.value = clipped;
    s.clipped = true;
  }
  return s;
}

/// Batch actor objective (to be maximized): mean clipped surrogate + zeta * mean entropy.
inline double actor_objective(std::span<const double> ratios, std::span<const double> advantages,
                              std::span<const double> entropies, double eps, double zeta) {
  if (ratios.size() != advantages.size() || ratios.size() != entropies.size()) {
    throw std::invalid_argument("actor_objective: length mismatch");
  }
  if (ratios.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    s += clipped_surrogate(ratios[i], advantages[i], eps).value + zeta * entropies[i];
  }
  return s / static_cast<double>(ratios.size());
}

// ---------------------------------------------------------------------------
// Episodes and collection

struct EpisodeMetrics {
  int episode = 0;
  double discounted_return = 0.0;
  double reward_sum = 0.0;
  double fairness = 0.0;    // Jain index of cumulative rates at the last slot
  double energy = 0.0;      // J, swarm propulsion over the episode
  double efficiency = 0.0;  // mean per-slot fair bits per joule, kbit/J
  int collisions = 0;       // UAV pairs below the separation distance, summed over slots
  int steps = 0;
};

class EpisodeAccumulator {
 public:
  explicit EpisodeAccumulator(double gamma = 1.0) : gamma_(gamma) {}

  void add(const StepOutcome& out) {
    m_.discounted_return += discount_ * out.reward;
    discount_ *= gamma_;
    m_.reward_sum += out.reward;
    m_.fairness = out.report.fairness;
    m_.energy += out.energy;
    eff_sum_ += out.efficiency / 1e3;
    m_.collisions += out.violations.collision_pairs;
    ++m_.steps;
  }

  EpisodeMetrics finish() const {
    EpisodeMetrics m = m_;
    m.efficiency = m_.steps > 0 ? eff_sum_ / m_.steps : 0.0;
    return m;
  }

 private:
  double gamma_;
  double discount_ = 1.0;
  double eff_sum_ = 0.0;
  EpisodeMetrics m_;
};

/// Joint action for the current state: agents act in index order through a shared mask.
struct JointDecision {
  std::vector<AgentAction> actions;
  std::vector<double> log_probs;
  std::vector<HybridAction> env_actions;
};

inline JointDecision decide(const PolicySet& policy, const Eigen::VectorXd& state, const ScenarioConfig& cfg,
                            Rng* rng) {
  JointDecision d;
  MaskState mask(cfg.num_users, cfg.num_uavs, cfg.num_subcarriers);
  for (int m = 0; m < cfg.num_uavs; ++m) {
    const HeadOutputs heads = policy.actor_for(m).infer(policy.actor_input(state, m));
    for (const auto& h : heads) {
      if (!h.allFinite()) throw NumericalFault("actor " + std::to_string(m) + " produced a non-finite output");
    }
    PolicySample s = sample_and_logprob(heads, mask, m, rng);
    d.env_actions.push_back(to_hybrid_action(s.action, cfg));
    d.actions.push_back(std::move(s.action));
    d.log_probs.push_back(s.log_prob);
  }
  return d;
}

/// Rollout workers whose episodes continue across update phases. Worker w
/// owns its own environment seeded with (seed, salt = w).
class Collector {
 public:
  Collector(ScenarioConfig cfg, int workers, std::uint64_t seed, double gamma) : cfg_(std::move(cfg)) {
    if (workers < 1) throw ConfigError("train.workers must be >= 1");
    for (int w = 0; w < workers; ++w) {
      workers_.push_back(std::make_unique<Worker>(cfg_, seed, static_cast<std::uint64_t>(w), gamma));
    }
  }

  int workers() const { return static_cast<int>(workers_.size()); }

  struct Result {
    RolloutBuffer buffer;
    std::vector<EpisodeMetrics> episodes;  // completed episodes, ordered by (worker, completion)
  };

  /// Collects `steps_per_worker` slots from every worker with a frozen policy.
  Result collect(const PolicySet& policy, int steps_per_worker) {
    std::vector<Worker::Chunk> chunks(workers_.size());
    if (workers_.size() == 1) {
      chunks[0] = workers_[0]->run(policy, cfg_, steps_per_worker);
    } else {
      std::vector<std::exception_ptr> errors(workers_.size());
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers_.size(); ++w) {
        threads.emplace_back([&, w] {
          try {
            chunks[w] = workers_[w]->run(policy, cfg_, steps_per_worker);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    Result out;
    for (auto& c : chunks) {
      for (auto& t : c.transitions) out.buffer.transitions.push_back(std::move(t));
      out.buffer.segment_ends.push_back(out.buffer.transitions.size());
      for (auto& e : c.episodes) out.episodes.push_back(e);
    }
    return out;
  }

 private:
  struct Worker {
    struct Chunk {
      std::vector<Transition> transitions;
      std::vector<EpisodeMetrics> episodes;
    };

    Worker(const ScenarioConfig& cfg, std::uint64_t seed, std::uint64_t salt, double gamma)
        : env(cfg, seed, salt), gamma(gamma), acc(gamma) {}

    Chunk run(const PolicySet& policy, const ScenarioConfig& cfg, int steps) {
      Chunk c;
      Rng& rng = env.streams()(Stream::Policy);
      for (int i = 0; i < steps; ++i) {
        if (need_reset) {
          state = env.reset().normalized();
          acc = EpisodeAccumulator(gamma);
          need_reset = false;
        }
        JointDecision d = decide(policy, state, cfg, &rng);
        const StepOutcome out = env.step(d.env_actions);
        Transition tr;
        tr.state = state;
        tr.next_state = out.next_state.normalized();
        tr.actions = std::move(d.actions);
        tr.log_probs = std::move(d.log_probs);
        tr.value = policy.critic().infer(state);
        tr.reward = out.reward;
        tr.done = out.done;
        if (!std::isfinite(tr.reward) || !std::isfinite(tr.value)) {
          throw NumericalFault("non-finite reward or value during collection");
        }
        acc.add(out);
        if (out.done) {
          c.episodes.push_back(acc.finish());
          need_reset = true;
        } else {
          state = tr.next_state;
        }
        c.transitions.push_back(std::move(tr));
      }
      if (!c.transitions.empty() && !c.transitions.back().done) {
        c.transitions.back().bootstrap = policy.critic().infer(c.transitions.back().next_state);
      }
      return c;
    }

    Environment env;
    double gamma;
    EpisodeAccumulator acc;
    Eigen::VectorXd state;
    bool need_reset = true;
  };

  ScenarioConfig cfg_;
  std::vector<std::unique_ptr<Worker>> workers_;
};

// ---------------------------------------------------------------------------
// PPO update

struct UpdateStats {
  int update = 0;
  int minibatches = 0;
  double first_mean_ratio = 0.0;
  double first_clip_fraction = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double actor_loss = 0.0;   // mean over minibatches, summed over agents
  double critic_loss = 0.0;  // mean over minibatches
  double entropy = 0.0;      // mean per-agent entropy
  double actor_grad_norm = 0.0;   // mean pre-clip norm
  double critic_grad_norm = 0.0;  // mean pre-clip norm
};

struct Optimizers {
  std::vector<std::unique_ptr<nn::Optimizer>> actors;
  std::unique_ptr<nn::Optimizer> critic;

  Optimizers(const PolicySet& policy, const TrainConfig& cfg) {
    for (std::size_t i = 0; i < policy.actors().size(); ++i) actors.push_back(nn::make_optimizer(cfg.optimizer, cfg.lr));
    critic = nn::make_optimizer(cfg.optimizer, cfg.lr);
  }
};

/// Statistics of one minibatch step.
struct MinibatchStats {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
};

/// Fills gradients for every network on the given minibatch without stepping
/// the optimizers. Returns the loss diagnostics.
inline MinibatchStats accumulate_minibatch_gradients(PolicySet& policy, const RolloutBuffer& buffer,
                                                     std::span<const double> advantages,
                                                     std::span<const std::size_t> batch, const TrainConfig& cfg,
                                                     const ScenarioConfig& scenario) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const int M = policy.agents();
  const double inv_b = 1.0 / static_cast<double>(B);
  MinibatchStats st;

  for (auto& a : policy.actors()) a.zero_grad();
  policy.critic().zero_grad();

  Eigen::MatrixXd states(policy.state_dim(), B);
  for (Eigen::Index j = 0; j < B; ++j) states.col(j) = buffer.transitions[batch[j]].state;

  // critic
  {
    const Eigen::RowVectorXd v = policy.critic().forward(states);
    std::vector<double> values(v.data(), v.data() + v.size());
    std::vector<double> targets;
    for (std::size_t i : batch) targets.push_back(buffer.returns[i]);
    const LossAndGrad lg = critic_loss(values, targets, cfg.critic_l2_norm);
    if (!std::isfinite(lg.loss)) throw NumericalFault("non-finite critic loss");
    st.critic_loss = lg.loss;
    policy.critic().backward(Eigen::Map<const Eigen::RowVectorXd>(lg.grad.data(), B));
  }

  // actors, in masking order; each transition's mask is advanced agent by agent
  std::vector<MaskState> masks(batch.size(), MaskState(scenario.num_users, scenario.num_uavs, scenario.num_subcarriers));
  const auto outs = policy.actor_shape().head_outputs();
  std::size_t clipped = 0;
  double ratio_sum = 0.0;
  for (int m = 0; m < M; ++m) {
    Actor& actor = policy.actor_for(m);
    const HeadBatch heads = actor.forward(policy.actor_inputs(states, m));
    HeadBatch grads;
    for (int h = 0; h < kHeadCount; ++h) grads[h] = Eigen::MatrixXd::Zero(outs[h], B);
    for (Eigen::Index j = 0; j < B; ++j) {
      const Transition& tr = buffer.transitions[batch[j]];
      HeadOutputs col;
      for (int h = 0; h < kHeadCount; ++h) col[h] = heads[h].col(j);
      // first pass: log-prob to get the ratio
      MaskState probe = masks[j];
      const PolicyEvaluation ev = evaluate_logprob(col, probe, m, tr.actions[m]);
      const double ratio = std::exp(ev.log_prob - tr.log_probs[m]);
      if (!std::isfinite(ratio)) {
        throw NumericalFault("non-finite probability ratio at batch index " + std::to_string(j) + ", agent " +
                             std::to_string(m));
      }
      const SurrogateTerm s = clipped_surrogate(ratio, advantages[batch[j]], cfg.clip_eps);
      ratio_sum += ratio;
      if (std::abs(ratio - 1.0) > cfg.clip_eps) ++clipped;
      st.actor_loss -= inv_b * (s.value + cfg.entropy_coef * ev.entropy);
      st.entropy += ev.entropy;
      // second pass: gradients of the negated objective
      HeadOutputs g;
      for (int h = 0; h < kHeadCount; ++h) g[h] = Eigen::VectorXd::Zero(outs[h]);
      evaluate_logprob(col, masks[j], m, tr.actions[m], &g, -inv_b * s.dlogp, -inv_b * cfg.entropy_coef);
      for (int h = 0; h < kHeadCount; ++h) grads[h].col(j) = g[h];
    }
    actor.backward(grads);
  }
  const double samples = static_cast<double>(B) * M;
  st.mean_ratio = ratio_sum / samples;
  st.clip_fraction = static_cast<double>(clipped) / samples;
  st.entropy /= samples;
  return st;
}

/// One full update phase: targets once, then floor(K * |buffer| / B) minibatch steps.
inline UpdateStats ppo_update(PolicySet& policy, Optimizers& opt, RolloutBuffer& buffer, const TrainConfig& cfg,
                              const ScenarioConfig& scenario, Rng& rng) {
  compute_targets(buffer, cfg);
  std::vector<double> adv = buffer.advantages;
  if (cfg.normalize_advantages) normalize_in_place(adv);

  const std::size_t n = buffer.size();
  const std::size_t bsz = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
  const long long steps = static_cast<long long>(cfg.reuse) * static_cast<long long>(n) / static_cast<long long>(bsz);
  UpdateStats us;
  us.minibatches = static_cast<int>(steps);
  std::vector<std::size_t> index(n);
  for (long long s = 0; s < steps; ++s) {
    std::iota(index.begin(), index.end(), std::size_t{0});
    // partial Fisher-Yates: first bsz entries are a uniform draw without replacement
    for (std::size_t i = 0; i < bsz; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(index[i], index[pick(rng)]);
    }
    const std::span<const std::size_t> batch(index.data(), bsz);
    const MinibatchStats st = accumulate_minibatch_gradients(policy, buffer, adv, batch, cfg, scenario);
    if (s == 0) {
      us.first_mean_ratio = st.mean_ratio;
      us.first_clip_fraction = st.clip_fraction;
    }
    double actor_norm = 0.0;
    for (std::size_t a = 0; a < policy.actors().size(); ++a) {
      const auto blocks = policy.actors()[a].params();
      actor_norm += nn::clip_grad_norm(blocks, cfg.max_grad_norm);
      opt.actors[a]->step(blocks);
    }
    const auto cblocks = policy.critic().params();
    const double critic_norm = nn::clip_grad_norm(cblocks, cfg.max_grad_norm);
    opt.critic->step(cblocks);

    us.mean_ratio += st.mean_ratio;
    us.clip_fraction += st.clip_fraction;
    us.actor_loss += st.actor_loss;
    us.critic_loss += st.critic_loss;
    us.entropy += st.entropy;
    us.actor_grad_norm += actor_norm / static_cast<double>(policy.actors().size());
    us.critic_grad_norm += critic_norm;
  }
  if (steps > 0) {
    const double k = static_cast<double>(steps);
    us.mean_ratio /= k;
    us.clip_fraction /= k;
    us.actor_loss /= k;
    us.critic_loss /= k;
    us.entropy /= k;
    us.actor_grad_norm /= k;
    us.critic_grad_norm /= k;
  }
  return us;
}

// ---------------------------------------------------------------------------
// Training pipelines

enum class Method { MahppoAm, Hppo, Exploration };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::MahppoAm: return "mahppo-am";
    case Method::Hppo: return "hppo";
    case Method::Exploration: return "exploration";
  }
  return "?";
}

inline ActorSharing method_sharing(Method m) {
  return m == Method::Hppo ? ActorSharing::Shared : ActorSharing::PerAgent;
}

struct TrainHooks {
  std::function<void(const EpisodeMetrics&)> on_episode;
  std::function<void(const UpdateStats&)> on_update;
  /// Called after the update phase in which the episode count crossed a
  /// multiple of checkpoint_every.
  std::function<void(const PolicySet&, int episodes_done)> on_checkpoint;
  /// Called with the current parameters when an update raises a numerical fault.
  std::function<void(const PolicySet&, const std::string& what)> on_fault;
};

struct TrainResult {
  PolicySet policy;
  std::vector<EpisodeMetrics> episodes;
  std::vector<UpdateStats> updates;
};

/// Runs `train.episodes` episodes of the chosen pipeline. Exploration collects
/// the same experience but never updates.
inline TrainResult train(const RunConfig& cfg, Method method, const TrainHooks& hooks = {}) {
  cfg.validate();
  const TrainConfig& tc = cfg.train;
  PolicySet policy(method_sharing(method), cfg.scenario, tc);
  policy.init(tc.seed, tc.init_log_std);
  Optimizers opt(policy, tc);
  Rng update_rng = make_rng(tc.seed, static_cast<std::uint32_t>(Stream::Update));
  Collector collector(cfg.scenario, tc.workers, cfg.scenario.seed, tc.gamma);

  std::vector<EpisodeMetrics> episodes;
  std::vector<UpdateStats> updates;
  const int steps_per_worker = tc.buffer_size / tc.workers;
  while (static_cast<int>(episodes.size()) < tc.episodes) {
    Collector::Result r = collector.collect(policy, steps_per_worker);
    const int before = static_cast<int>(episodes.size());
    for (EpisodeMetrics& e : r.episodes) {
      if (static_cast<int>(episodes.size()) >= tc.episodes) break;
      e.episode = static_cast<int>(episodes.size());
      episodes.push_back(e);
      if (hooks.on_episode) hooks.on_episode(e);
    }
    if (method != Method::Exploration) {
      try {
        UpdateStats us = ppo_update(policy, opt, r.buffer, tc, cfg.scenario, update_rng);
        us.update = static_cast<int>(updates.size());
        updates.push_back(us);
        if (hooks.on_update) hooks.on_update(us);
      } catch (const NumericalFault& e) {
        if (hooks.on_fault) hooks.on_fault(policy, e.what());
        throw;
      }
    }
    r.buffer.clear();
    const int after = static_cast<int>(episodes.size());
    if (tc.checkpoint_every > 0 && hooks.on_checkpoint && after / tc.checkpoint_every > before / tc.checkpoint_every &&
        method != Method::Exploration) {
      hooks.on_checkpoint(policy, after);
    }
  }
  return {std::move(policy), std::move(episodes), std::move(updates)};
}

inline TrainResult baseline_hppo(const RunConfig& cfg, const TrainHooks& hooks = {}) {
  return train(cfg, Method::Hppo, hooks);
}

inline TrainResult baseline_exploration(const RunConfig& cfg, const TrainHooks& hooks = {}) {
  return train(cfg, Method::Exploration, hooks);
}

/// Salt of the evaluation environment; shared by every method so that all of
/// them face identical user placements, regions, mobility and fading.
inline constexpr std::uint64_t kEvalSalt = 0xE7A1;

/// Per-step callback during evaluation: (episode, slot before the step, env after the step, outcome).
using StepObserver = std::function<void(int, int, const Environment&, const StepOutcome&)>;

/// Runs `episodes` episodes with a frozen policy; greedy unless `stochastic`.
inline std::vector<EpisodeMetrics> evaluate(const PolicySet& policy, const ScenarioConfig& scenario, int episodes,
                                            std::uint64_t seed, bool stochastic, double gamma,
                                            const StepObserver& observer = {}) {
  Environment env(scenario, seed, kEvalSalt);
  Rng& rng = env.streams()(Stream::Policy);
  std::vector<EpisodeMetrics> out;
  for (int e = 0; e < episodes; ++e) {
    Eigen::VectorXd state = env.reset().normalized();
    EpisodeAccumulator acc(gamma);
    while (!env.done()) {
      const int slot = env.world().slot;
      const JointDecision d = decide(policy, state, scenario, stochastic ? &rng : nullptr);
      const StepOutcome o = env.step(d.env_actions);
      acc.add(o);
      if (observer) observer(e, slot, env, o);
      state = o.next_state.normalized();
    }
    EpisodeMetrics m = acc.finish();
    m.episode = e;
    out.push_back(m);
  }
  return out;
}

}  // namespace uavswarm

#endif  // UAVSWARM_TRAINER_HPP

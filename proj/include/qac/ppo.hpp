#ifndef QAC_PPO_HPP_
#define QAC_PPO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qac/categorical.hpp"
#include "qac/curiosity.hpp"
#include "qac/environment.hpp"
#include "qac/errors.hpp"
#include "qac/mlp.hpp"
#include "qac/optim.hpp"
#include "qac/rng.hpp"
#include "qac/tensor.hpp"

namespace qac {

struct TrainerConfig {
  int rollouts = 2000;        // N
  int rollout_length = 128;   // K
  int epochs = 3;             // N_opt
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double lr = 3e-4;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  double intrinsic_scale = 1.0;  // lambda_i
  bool extrinsic_enabled = true;
  bool normalize_advantages = true;
  std::size_t hidden = 64;
  int success_window = 20;
  int checkpoint_interval = 0;  // rollouts; 0 disables
};

inline void validate(const TrainerConfig& c) {
  if (c.rollouts < 1) throw ConfigError("trainer: rollouts must be >= 1");
  if (c.rollout_length < 1)
    throw ConfigError("trainer: rollout_length must be >= 1");
  if (c.epochs < 1) throw ConfigError("trainer: epochs must be >= 1");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0))
    throw ConfigError("trainer: gamma must be in (0, 1]");
  if (!(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0))
    throw ConfigError("trainer: gae_lambda must be in [0, 1]");
  if (!(c.clip > 0.0)) throw ConfigError("trainer: clip must be positive");
  if (!(c.lr >= 0.0)) throw ConfigError("trainer: lr must be non-negative");
  if (!(c.intrinsic_scale >= 0.0))
    throw ConfigError("trainer: intrinsic_scale must be non-negative");
  if (c.hidden < 1) throw ConfigError("trainer: hidden must be >= 1");
  if (c.success_window < 1)
    throw ConfigError("trainer: success_window must be >= 1");
  if (c.checkpoint_interval < 0)
    throw ConfigError("trainer: checkpoint_interval must be >= 0");
}

// r = r_e (when enabled) + lambda_i * r_i, unclipped.
inline double combine_rewards(double extrinsic, double intrinsic,
                              double intrinsic_scale, bool extrinsic_enabled) {
  if (intrinsic < 0.0) throw ContractError("intrinsic reward must be >= 0");
  return (extrinsic_enabled ? extrinsic : 0.0) + intrinsic_scale * intrinsic;
}

// ---------------------------------------------------------------------------
// Generalized advantage estimation

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> targets;  // raw advantages + values
};

// Backward recursion. `dones[t]` cuts bootstrapping after step t;
// `bootstrap_value` is V of the state following the last step. Targets use
// the unnormalized advantages.
inline GaeResult compute_gae(std::span<const double> rewards,
                             std::span<const double> values,
                             std::span<const bool> dones,
                             double bootstrap_value, double gamma,
                             double lambda, bool normalize = true) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n)
    throw ContractError("compute_gae: length mismatch");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.targets.assign(n, 0.0);
  double gae = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = i + 1 < n ? values[i + 1] : bootstrap_value;
    const double mask = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * mask - values[i];
    gae = delta + gamma * lambda * mask * gae;
    r.advantages[i] = gae;
    r.targets[i] = gae + values[i];
  }
  if (normalize && n > 1) {
    double mean = 0.0;
    for (double a : r.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : r.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : r.advantages) a = (a - mean) / (sd + 1e-8);
  }
  for (double a : r.advantages)
    if (!std::isfinite(a)) throw DivergenceError("non-finite advantage");
  return r;
}

// ---------------------------------------------------------------------------
// Policy

struct RolloutBatch {
  std::vector<Transition> transitions;
  std::vector<double> rewards;  // combined
  double bootstrap_value = 0.0;
  std::vector<double> advantages;
  std::vector<double> targets;

  std::size_t size() const { return transitions.size(); }
};

inline void compute_gae(RolloutBatch& batch, double gamma, double lambda,
                        bool normalize = true) {
  std::vector<double> values;
  std::vector<bool> dones;
  for (const auto& t : batch.transitions) {
    values.push_back(t.value);
    dones.push_back(t.done);
  }
  // std::vector<bool> has no contiguous storage.
  std::unique_ptr<bool[]> done_buf(new bool[dones.size()]);
  for (std::size_t i = 0; i < dones.size(); ++i) done_buf[i] = dones[i];
  auto r = compute_gae(batch.rewards, values,
                       std::span<const bool>(done_buf.get(), dones.size()),
                       batch.bootstrap_value, gamma, lambda, normalize);
  batch.advantages = std::move(r.advantages);
  batch.targets = std::move(r.targets);
}

// Separate tanh actor and critic MLPs sharing one Adam state.
struct ActorCritic {
  MlpParams actor;
  MlpParams critic;
  AdamState adam;

  ActorCritic(std::size_t obs_dim, std::size_t actions, std::size_t hidden,
              double lr, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xac7));
    actor = make_mlp({obs_dim, hidden, hidden, actions}, Activation::kTanh,
                     rng, 0.01);
    critic =
        make_mlp({obs_dim, hidden, hidden, 1}, Activation::kTanh, rng, 1.0);
    auto params = parameters();
    adam = make_adam(params, AdamConfig{lr});
  }

  std::vector<Tensor*> parameters() {
    auto out = actor.tensors();
    for (Tensor* t : critic.tensors()) out.push_back(t);
    return out;
  }
  std::vector<const Tensor*> parameters() const {
    auto out = actor.tensors();
    for (const Tensor* t : critic.tensors()) out.push_back(t);
    return out;
  }

  double value(std::span<const double> obs) const {
    return mlp_predict(critic, obs)[0];
  }
};

struct PolicyStep {
  int action = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
  double value = 0.0;
};

inline PolicyStep act(const ActorCritic& policy, std::span<const double> obs,
                      Rng& rng) {
  const auto logits = mlp_predict(policy.actor, obs);
  const auto s = categorical_head(logits, rng);
  return {s.action, s.log_prob, s.entropy, policy.value(obs)};
}

inline void save_policy(const std::string& path, const ActorCritic& policy) {
  const auto tensors = policy.parameters();
  save_checkpoint(path, tensors);
}

inline void load_policy(const std::string& path, ActorCritic& policy) {
  auto loaded = load_checkpoint(path);
  auto params = policy.parameters();
  if (loaded.size() != params.size())
    throw ConfigError("checkpoint tensor count does not match policy");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (loaded[i].shape() != params[i]->shape())
      throw ConfigError("checkpoint tensor shape does not match policy");
    *params[i] = std::move(loaded[i]);
  }
}

// ---------------------------------------------------------------------------
// PPO update

struct PpoStats {
  std::vector<double> policy_loss;  // per epoch, before that epoch's step
  std::vector<double> value_loss;
  std::vector<double> entropy;
  std::vector<double> clip_fraction;
};

// Full-batch clipped-surrogate epochs. The surrogate gradient of a sample is
// zero exactly when the clipped branch is the active minimum.
inline PpoStats ppo_update(ActorCritic& policy, const RolloutBatch& batch,
                           const TrainerConfig& config) {
  const std::size_t n = batch.size();
  if (n == 0 || batch.advantages.size() != n || batch.targets.size() != n)
    throw ContractError("ppo_update: batch lacks advantages or targets");
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (const auto& t : batch.transitions) rows.push_back(t.observation);
  const Tensor obs = stack_rows(rows);
  const std::size_t actions = policy.actor.output_dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  PpoStats stats;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    MlpTrace actor_trace = mlp_forward(policy.actor, obs);
    MlpTrace critic_trace = mlp_forward(policy.critic, obs);
    Tensor g_logits = Tensor::matrix(n, actions);
    Tensor g_value = Tensor::matrix(n, 1);
    double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
    int clipped = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& tr = batch.transitions[i];
      const auto lp = log_softmax(actor_trace.output().row(i));
      const double h = entropy_from_log_probs(lp);
      const double adv = batch.advantages[i];
      const double ratio = std::exp(lp[tr.action] - tr.log_prob);
      const double clipped_ratio =
          std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
      const double surr1 = ratio * adv;
      const double surr2 = clipped_ratio * adv;
      policy_loss -= std::min(surr1, surr2) * inv_n;
      entropy += h * inv_n;
      if (std::abs(ratio - 1.0) > config.clip) ++clipped;
      // d(-surr)/d lp[a] when the unclipped branch is active.
      const double g_lp = surr1 <= surr2 ? -adv * ratio * inv_n : 0.0;
      auto g = g_logits.row(i);
      for (std::size_t a = 0; a < actions; ++a) {
        const double p = std::exp(lp[a]);
        const double onehot = static_cast<int>(a) == tr.action ? 1.0 : 0.0;
        g[a] = g_lp * (onehot - p) +
               config.entropy_coef * inv_n * p * (lp[a] + h);
      }
      const double v = critic_trace.output()(i, 0);
      const double err = v - batch.targets[i];
      value_loss += err * err * inv_n;
      g_value(i, 0) = config.value_coef * 2.0 * err * inv_n;
    }
    const double total =
        policy_loss + config.value_coef * value_loss -
        config.entropy_coef * entropy;
    if (!std::isfinite(total)) {
      std::ostringstream msg;
      msg << "ppo: non-finite loss (policy " << policy_loss << ", value "
          << value_loss << ", entropy " << entropy << ") on batch of " << n;
      throw DivergenceError(msg.str());
    }
    stats.policy_loss.push_back(policy_loss);
    stats.value_loss.push_back(value_loss);
    stats.entropy.push_back(entropy);
    stats.clip_fraction.push_back(static_cast<double>(clipped) * inv_n);

    MlpGradients ga = backward(actor_trace, g_logits);
    MlpGradients gc = backward(critic_trace, g_value);
    auto grads = ga.tensors();
    for (Tensor* t : gc.tensors()) grads.push_back(t);
    clip_global_norm(grads, config.max_grad_norm);
    auto params = policy.parameters();
    adam_step(params, grads, policy.adam);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Rollout collection

// Trailing-window episode bookkeeping.
class EpisodeTracker {
 public:
  explicit EpisodeTracker(int window) : window_(window) {}

  void on_step(double extrinsic, bool done, bool success) {
    current_return_ += extrinsic;
    if (!done) return;
    history_.push_back({current_return_, success});
    if (static_cast<int>(history_.size()) > window_) history_.pop_front();
    ++episodes_;
    current_return_ = 0.0;
  }

  double mean_return() const {
    if (history_.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : history_) s += e.ret;
    return s / static_cast<double>(history_.size());
  }
  double success_rate() const {
    if (history_.empty()) return 0.0;
    int s = 0;
    for (const auto& e : history_) s += e.success ? 1 : 0;
    return static_cast<double>(s) / static_cast<double>(history_.size());
  }
  long episodes() const { return episodes_; }

 private:
  struct Episode {
    double ret;
    bool success;
  };
  int window_;
  std::deque<Episode> history_;
  double current_return_ = 0.0;
  long episodes_ = 0;
};

// Environment cursor carried between rollouts.
struct RolloutCursor {
  std::vector<double> observation;
  bool started = false;
};

// K steps across episode boundaries; the environment resets on done and the
// rollout continues. The curiosity module sees every transition in order.
inline RolloutBatch collect_rollout(const ActorCritic& policy, Environment& env,
                                    CuriosityModule& curiosity,
                                    const TrainerConfig& config,
                                    int rollout_index, RolloutCursor& cursor,
                                    EpisodeTracker& tracker, Rng& rng) {
  if (!cursor.started) {
    cursor.observation = env.reset();
    cursor.started = true;
  }
  curiosity.begin_rollout(rollout_index);
  RolloutBatch batch;
  batch.transitions.reserve(config.rollout_length);
  for (int step = 0; step < config.rollout_length; ++step) {
    Transition t;
    t.observation = cursor.observation;
    if (const Scene* s = env.scene()) t.scene = *s;
    const PolicyStep ps = act(policy, t.observation, rng);
    StepOutcome out;
    try {
      out = env.step(ps.action);
    } catch (const std::exception& e) {
      throw std::runtime_error("environment error at rollout " +
                               std::to_string(rollout_index) + " step " +
                               std::to_string(step) + ": " + e.what());
    }
    if (const Scene* s = env.scene()) t.next_scene = *s;
    t.action = ps.action;
    t.log_prob = ps.log_prob;
    t.value = ps.value;
    t.next_observation = out.observation;
    t.done = out.done;
    t.success = out.success;

    StepView view;
    view.step_in_rollout = step;
    view.observation = t.observation;
    view.next_observation = t.next_observation;
    view.action = t.action;
    view.scene_before = t.scene ? &*t.scene : nullptr;
    view.scene_after = t.next_scene ? &*t.next_scene : nullptr;
    t.intrinsic = curiosity.intrinsic(view);
    t.extrinsic = config.extrinsic_enabled ? out.reward : 0.0;
    batch.rewards.push_back(combine_rewards(
        out.reward, t.intrinsic, config.intrinsic_scale,
        config.extrinsic_enabled));
    tracker.on_step(t.extrinsic, t.done, t.success);

    cursor.observation = t.done ? env.reset() : out.observation;
    batch.transitions.push_back(std::move(t));
  }
  batch.bootstrap_value =
      batch.transitions.back().done ? 0.0 : policy.value(cursor.observation);
  return batch;
}

// ---------------------------------------------------------------------------
// Trainer: collect, estimate advantages, update, repeat.

struct RolloutMetrics {
  long rollout_index = 0;
  long env_steps = 0;
  double mean_extrinsic_return = 0.0;
  double success_rate = 0.0;
  double mean_intrinsic = 0.0;
  int replacements = 0;
  long reservoir_remaining = -1;
  long episodes = 0;
  double entropy = 0.0;
};

class Trainer {
 public:
  Trainer(Environment& env, CuriosityModule& curiosity,
          const TrainerConfig& config, std::uint64_t seed)
      : env_(env),
        curiosity_(curiosity),
        config_(config),
        policy_(static_cast<std::size_t>(env.observation_size()),
                static_cast<std::size_t>(env.action_count()), config.hidden,
                config.lr, mix_seed(seed, 1)),
        rng_(mix_seed(seed, 2)),
        tracker_(config.success_window) {
    validate(config_);
  }

  RolloutMetrics run_rollout() {
    ++rollout_index_;
    RolloutBatch batch =
        collect_rollout(policy_, env_, curiosity_, config_, rollout_index_,
                        cursor_, tracker_, rng_);
    compute_gae(batch, config_.gamma, config_.gae_lambda,
                config_.normalize_advantages);
    curiosity_.end_rollout(batch.transitions);
    const PpoStats stats = ppo_update(policy_, batch, config_);

    RolloutMetrics m;
    m.rollout_index = rollout_index_;
    m.env_steps = static_cast<long>(rollout_index_) * config_.rollout_length;
    m.mean_extrinsic_return = tracker_.mean_return();
    m.success_rate = tracker_.success_rate();
    double ri = 0.0;
    for (const auto& t : batch.transitions) ri += t.intrinsic;
    m.mean_intrinsic = ri / static_cast<double>(batch.size());
    const auto cs = curiosity_.rollout_stats();
    m.replacements = cs.replacements;
    m.reservoir_remaining = cs.reservoir_remaining;
    m.episodes = tracker_.episodes();
    m.entropy = stats.entropy.front();
    last_batch_ = std::move(batch);
    return m;
  }

  ActorCritic& policy() { return policy_; }
  const RolloutBatch& last_batch() const { return last_batch_; }
  int rollout_index() const { return rollout_index_; }

 private:
  Environment& env_;
  CuriosityModule& curiosity_;
  TrainerConfig config_;
  ActorCritic policy_;
  Rng rng_;
  EpisodeTracker tracker_;
  RolloutCursor cursor_;
  int rollout_index_ = 0;
  RolloutBatch last_batch_;
};

}  // namespace qac

#endif  // QAC_PPO_HPP_

#ifndef QAC_ANE_CURIOSITY_HPP_
#define QAC_ANE_CURIOSITY_HPP_

#include <cstdint>
#include <deque>
#include <iostream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qac/curiosity.hpp"
#include "qac/errors.hpp"
#include "qac/question.hpp"
#include "qac/rng.hpp"
#include "qac/task.hpp"

namespace qac {

// Answer-flip curiosity with a question reservoir.
//
// The reservoir S holds questions not currently asked; the active set D holds
// one slot of n questions per rollout step. Every rollout D's slots are
// shuffled, step j asks slot j, and the intrinsic reward is the number of
// that slot's questions whose ground-truth answer changed across the step.
// Each flip bumps the question's counter C[q]; once C[q] / beta reaches
// alpha (beta = 1-based rollout index) the question is retired and replaced
// by the front of S.

struct AnEConfig {
  int n = 1;            // questions per step
  double alpha = 0.6;   // retirement threshold, 0.5 <= alpha <= 1
  long reservoir_size = 0;  // M; 0 means every question of the hop class
  int hop = 2;
  int slots = 0;        // active-set slots; 0 picks automatically
  double relation_margin = 0.0;
};

inline void validate(const AnEConfig& c) {
  if (c.n < 1) throw ConfigError("ane: n must be >= 1");
  if (!(c.alpha >= 0.5 && c.alpha <= 1.0))
    throw ConfigError("ane: alpha must satisfy 0.5 <= alpha <= 1");
  if (c.hop < 1 || c.hop > 3) throw ConfigError("ane: hop must be 1, 2 or 3");
  if (c.reservoir_size < 0) throw ConfigError("ane: reservoir_size < 0");
  if (c.slots < 0) throw ConfigError("ane: slots < 0");
}

struct Reservoir {
  std::deque<QuestionAST> questions;           // S, front = index 0
  std::map<QuestionAST, long> flip_counters;   // C
  std::vector<QuestionAST> retired;
  long capacity = 0;                           // M
  long exhausted_events = 0;

  bool contains(const QuestionAST& q) const {
    for (const auto& s : questions)
      if (s == q) return true;
    return false;
  }
};

struct ActiveSet {
  std::vector<std::vector<QuestionAST>> slots;  // D
  int n = 1;

  std::size_t question_count() const {
    std::size_t c = 0;
    for (const auto& s : slots) c += s.size();
    return c;
  }
};

struct StepCuriosityResult {
  int intrinsic_reward = 0;
  std::vector<bool> flipped;
  std::vector<std::pair<QuestionAST, QuestionAST>> replacements;
};

// Builds S by describing freshly reset scenes until |S| = M. Each
// description is visited in a seeded random order so that a partial
// reservoir is not biased towards early colors.
inline Reservoir init_reservoir(const GoalSpec& goal, const EnvConfig& env,
                                const AnEConfig& config, std::uint64_t seed) {
  validate(config);
  const long total = static_cast<long>(question_count(config.hop));
  const long target = config.reservoir_size == 0 ? total : config.reservoir_size;
  if (target > total)
    throw ConfigError("ane: reservoir size " + std::to_string(target) +
                      " exceeds the " + std::to_string(total) +
                      " enumerable hop-" + std::to_string(config.hop) +
                      " questions");
  Reservoir r;
  r.capacity = target;
  Rng rng(mix_seed(seed, 0xa5e));
  std::set<QuestionAST> present;
  while (static_cast<long>(r.questions.size()) < target) {
    const Scene scene = reset(goal, rng.next_u64(), env);
    auto description = describe_scene(scene, config.hop, config.relation_margin);
    rng.shuffle(std::span(description));
    for (auto& [q, ans] : description) {
      (void)ans;
      if (static_cast<long>(r.questions.size()) >= target) break;
      if (present.insert(q).second) {
        r.flip_counters[q] = 0;
        r.questions.push_back(q);
      }
    }
  }
  return r;
}

// Reservoir over an explicit question list (e.g. a question file), in order.
inline Reservoir init_reservoir(const std::vector<QuestionAST>& pool) {
  Reservoir r;
  std::set<QuestionAST> present;
  for (const auto& q : pool) {
    if (!is_well_formed(q)) throw ConfigError("ane: malformed question");
    if (present.insert(q).second) {
      r.flip_counters[q] = 0;
      r.questions.push_back(q);
    }
  }
  r.capacity = static_cast<long>(r.questions.size());
  return r;
}

// Draws n * slot_count questions uniformly without replacement from S.
inline ActiveSet init_active_set(Reservoir& reservoir, int n, int slot_count,
                                 Rng& rng) {
  if (n < 1 || slot_count < 1)
    throw ConfigError("ane: n and slot count must be positive");
  const std::size_t need = static_cast<std::size_t>(n) * slot_count;
  if (reservoir.questions.size() < need)
    throw ConfigError("ane: reservoir holds " +
                      std::to_string(reservoir.questions.size()) +
                      " questions but the active set needs " +
                      std::to_string(need));
  ActiveSet d;
  d.n = n;
  d.slots.resize(slot_count);
  for (auto& slot : d.slots) {
    for (int k = 0; k < n; ++k) {
      const auto idx = rng.below(reservoir.questions.size());
      slot.push_back(std::move(reservoir.questions[idx]));
      reservoir.questions.erase(reservoir.questions.begin() +
                                static_cast<std::ptrdiff_t>(idx));
    }
  }
  return d;
}

// Slot order is permuted; each slot keeps its n-question grouping.
inline void begin_rollout(ActiveSet& active, Rng& rng) {
  rng.shuffle(std::span(active.slots));
}

inline StepCuriosityResult step_intrinsic(
    const Scene& before, const Scene& after,
    std::span<const QuestionAST> slot_questions, double margin = 0.0) {
  StepCuriosityResult r;
  r.flipped.reserve(slot_questions.size());
  for (const auto& q : slot_questions) {
    const bool flip = answer(before, q, margin) != answer(after, q, margin);
    r.flipped.push_back(flip);
    r.intrinsic_reward += flip ? 1 : 0;
  }
  return r;
}

// Counts the flips of one slot and retires questions whose flip frequency
// C[q] / (beta * samples_per_rollout) reaches alpha. The replacement is the
// reservoir's front question. With an empty reservoir the question stays and
// its counter restarts at 0.
inline std::vector<std::pair<QuestionAST, QuestionAST>> apply_replacement(
    ActiveSet& active, std::size_t slot_index, Reservoir& reservoir,
    const std::vector<bool>& flips, long beta, double alpha,
    long samples_per_rollout = 1) {
  if (beta < 1) throw ContractError("ane: rollout index beta is 1-based");
  if (slot_index >= active.slots.size())
    throw ContractError("ane: slot index out of range");
  auto& slot = active.slots[slot_index];
  if (flips.size() != slot.size())
    throw ContractError("ane: flip vector does not match slot size");
  std::vector<std::pair<QuestionAST, QuestionAST>> replaced;
  const double denom = static_cast<double>(beta * samples_per_rollout);
  for (std::size_t k = 0; k < slot.size(); ++k) {
    if (!flips[k]) continue;
    long& count = reservoir.flip_counters[slot[k]];
    ++count;
    if (static_cast<double>(count) / denom < alpha) continue;
    if (reservoir.questions.empty()) {
      if (reservoir.exhausted_events++ == 0)
        std::clog << "warning: question reservoir exhausted; keeping question "
                     "and resetting its flip counter\n";
      count = 0;
      continue;
    }
    QuestionAST fresh = std::move(reservoir.questions.front());
    reservoir.questions.pop_front();
    reservoir.flip_counters.try_emplace(fresh, 0);
    reservoir.retired.push_back(slot[k]);
    replaced.emplace_back(slot[k], fresh);
    slot[k] = std::move(fresh);
  }
  return replaced;
}

// Active-set slot count: one per rollout step when the reservoir allows it
// (n * K <= M); otherwise the largest divisor of K using at most half of M,
// with slots cycled within the rollout.
inline int auto_slot_count(int n, int rollout_length, long reservoir_size) {
  if (static_cast<long>(n) * rollout_length <= reservoir_size)
    return rollout_length;
  for (int d = rollout_length; d >= 1; --d) {
    if (rollout_length % d != 0) continue;
    if (2L * n * d <= reservoir_size) return d;
  }
  throw ConfigError("ane: reservoir of " + std::to_string(reservoir_size) +
                    " questions cannot fill one slot of " + std::to_string(n));
}

struct AneLogRecord {
  long rollout_index = 0;
  long total_intrinsic = 0;
  int replacements_count = 0;
  long reservoir_remaining = 0;
};

class AneCuriosity : public CuriosityModule {
 public:
  AneCuriosity(const AnEConfig& config, int rollout_length,
               const GoalSpec& goal, const EnvConfig& env, std::uint64_t seed,
               const std::vector<QuestionAST>* question_pool = nullptr)
      : config_(config), rng_(mix_seed(seed, 0xa11e)) {
    validate(config_);
    if (question_pool) {
      reservoir_ = init_reservoir(*question_pool);
    } else {
      reservoir_ = init_reservoir(goal, env, config_, seed);
    }
    const int slots = config_.slots > 0
                          ? config_.slots
                          : auto_slot_count(config_.n, rollout_length,
                                            reservoir_.capacity);
    if (rollout_length % slots != 0)
      throw ConfigError("ane: slot count must divide the rollout length");
    samples_per_rollout_ = rollout_length / slots;
    active_ = init_active_set(reservoir_, config_.n, slots, rng_);
  }

  CuriosityMethod method() const override { return CuriosityMethod::kAne; }

  void begin_rollout(int rollout_index) override {
    beta_ = rollout_index;
    qac::begin_rollout(active_, rng_);
    stats_ = {};
    stats_.reservoir_remaining = static_cast<long>(reservoir_.questions.size());
  }

  double intrinsic(const StepView& view) override {
    if (!view.scene_before || !view.scene_after)
      throw ContractError("ane curiosity needs ground-truth scenes");
    if (beta_ < 1) throw ContractError("ane: begin_rollout not called");
    const std::size_t slot =
        static_cast<std::size_t>(view.step_in_rollout) % active_.slots.size();
    last_ = step_intrinsic(*view.scene_before, *view.scene_after,
                           active_.slots[slot], config_.relation_margin);
    last_.replacements =
        apply_replacement(active_, slot, reservoir_, last_.flipped, beta_,
                          config_.alpha, samples_per_rollout_);
    stats_.total_intrinsic += last_.intrinsic_reward;
    stats_.replacements += static_cast<int>(last_.replacements.size());
    stats_.reservoir_remaining = static_cast<long>(reservoir_.questions.size());
    return last_.intrinsic_reward;
  }

  void end_rollout(std::span<const Transition>) override {
    log_.push_back({beta_, static_cast<long>(stats_.total_intrinsic),
                    stats_.replacements, stats_.reservoir_remaining});
  }

  const Reservoir& reservoir() const { return reservoir_; }
  const ActiveSet& active_set() const { return active_; }
  const StepCuriosityResult& last_step() const { return last_; }
  const std::vector<AneLogRecord>& log() const { return log_; }
  long samples_per_rollout() const { return samples_per_rollout_; }

 private:
  AnEConfig config_;
  Rng rng_;
  Reservoir reservoir_;
  ActiveSet active_;
  long beta_ = 0;
  long samples_per_rollout_ = 1;
  StepCuriosityResult last_;
  std::vector<AneLogRecord> log_;
};

}  // namespace qac

#endif  // QAC_ANE_CURIOSITY_HPP_

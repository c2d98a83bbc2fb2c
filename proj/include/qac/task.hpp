#ifndef QAC_TASK_HPP_
#define QAC_TASK_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qac/environment.hpp"
#include "qac/errors.hpp"
#include "qac/question.hpp"
#include "qac/rng.hpp"
#include "qac/scene.hpp"

namespace qac {

enum class GoalKind : std::uint8_t { kDenseRelation, kSparseOrdering };

struct GoalSpec {
  GoalKind kind = GoalKind::kSparseOrdering;
  std::optional<QuestionAST> relation_question;  // dense goals only
};

// "There is a green sphere; are there any rubber cyan balls in front of it?"
inline GoalSpec default_dense_goal() {
  QuestionAST q;
  q.hops = 1;
  q.atoms.push_back({{Color::kCyan, Material::kRubber},
                     {Color::kGreen, Material::kRubber},
                     Relation::kInFrontOf});
  return GoalSpec{GoalKind::kDenseRelation, std::move(q)};
}

inline GoalSpec sparse_ordering_goal() {
  return GoalSpec{GoalKind::kSparseOrdering, std::nullopt};
}

inline void validate(const GoalSpec& goal) {
  if (goal.kind == GoalKind::kDenseRelation) {
    if (!goal.relation_question || goal.relation_question->hops != 1 ||
        !is_well_formed(*goal.relation_question))
      throw ContractError("dense goal needs a one-hop relation question");
  } else if (goal.relation_question) {
    throw ContractError("sparse ordering goal carries no question");
  }
}

// ---------------------------------------------------------------------------
// Rewards

struct RewardResult {
  double reward = 0.0;
  bool done = false;
};

inline RewardResult dense_reward(const Scene& scene_after,
                                 const GoalSpec& goal,
                                 const EnvConfig& config = {}) {
  if (goal.kind != GoalKind::kDenseRelation || !goal.relation_question)
    throw ContractError("dense_reward needs a dense relation goal");
  if (answer(scene_after, *goal.relation_question, config.relation_margin))
    return {1.0, true};
  return {0.0, false};
}

// Strict left-to-right color order and every y within the tolerance of the
// median y.
inline bool ordering_satisfied(const Scene& scene, const EnvConfig& config) {
  for (int i = 0; i + 1 < kNumObjects; ++i)
    if (!(scene.objects[i].position.x < scene.objects[i + 1].position.x))
      return false;
  std::array<double, kNumObjects> ys;
  for (int i = 0; i < kNumObjects; ++i) ys[i] = scene.objects[i].position.y;
  std::sort(ys.begin(), ys.end());
  const double median = ys[kNumObjects / 2];
  for (double y : ys)
    if (std::abs(y - median) > config.vertical_tolerance) return false;
  return true;
}

inline RewardResult sparse_reward(const Scene& scene_after,
                                  const EnvConfig& config = {}) {
  if (ordering_satisfied(scene_after, config)) return {10.0, true};
  return {0.0, false};
}

inline RewardResult task_reward(const Scene& scene_after, const GoalSpec& goal,
                                const EnvConfig& config) {
  return goal.kind == GoalKind::kDenseRelation
             ? dense_reward(scene_after, goal, config)
             : sparse_reward(scene_after, config);
}

inline bool goal_satisfied(const Scene& scene, const GoalSpec& goal,
                           const EnvConfig& config) {
  return task_reward(scene, goal, config).done;
}

inline bool episode_done(const Scene& scene, bool reward_done, int max_steps) {
  if (max_steps <= 0) throw ContractError("max_steps must be positive");
  return reward_done || scene.step_count >= max_steps;
}

// ---------------------------------------------------------------------------
// Reset

// Uniform rejection placement. Whole scenes that already satisfy the goal are
// re-drawn. Gives up after `max_placement_attempts` draws in total.
inline Scene reset(const GoalSpec& goal, std::uint64_t seed,
                   const EnvConfig& config = {}) {
  validate(goal);
  validate(config);
  Rng rng(mix_seed(seed, 0x5ce9e));
  const double bound = config.bound();
  const double contact = 2.0 * config.radius;
  int attempts = 0;
  while (true) {
    Scene scene;
    for (int i = 0; i < kNumObjects; ++i) {
      scene.objects[i].color = static_cast<Color>(i);
      scene.objects[i].material = Material::kRubber;
      while (true) {
        if (++attempts > config.max_placement_attempts)
          throw ConfigError("object placement failed after " +
                            std::to_string(config.max_placement_attempts) +
                            " attempts; arena too small");
        const Vec2 p{rng.uniform(-bound, bound), rng.uniform(-bound, bound)};
        bool clear = true;
        for (int j = 0; j < i && clear; ++j)
          clear = detail::distance(p, scene.objects[j].position) >= contact;
        if (clear) {
          scene.objects[i].position = p;
          break;
        }
      }
    }
    if (!goal_satisfied(scene, goal, config)) return scene;
  }
}

// ---------------------------------------------------------------------------
// Episodic wrapper

// One pushing-arena episode stream. Episode seeds are drawn from the
// environment's own stream, so a run is reproducible from its seed.
class SceneEnv : public Environment {
 public:
  SceneEnv(GoalSpec goal, EnvConfig config, std::uint64_t seed)
      : goal_(std::move(goal)), config_(config), rng_(mix_seed(seed, 17)) {
    validate(goal_);
    validate(config_);
    scene_ = qac::reset(goal_, rng_.next_u64(), config_);
  }

  int observation_size() const override { return kStateDim; }
  int action_count() const override { return kNumActions; }

  std::vector<double> reset() override {
    scene_ = qac::reset(goal_, rng_.next_u64(), config_);
    return state_vector(scene_);
  }

  StepOutcome step(int action) override {
    scene_ = qac::step(scene_, decode_action(action), config_);
    const RewardResult r = task_reward(scene_, goal_, config_);
    StepOutcome out;
    out.observation = state_vector(scene_);
    out.reward = r.reward;
    out.success = r.done;
    out.done = episode_done(scene_, r.done, config_.max_steps);
    return out;
  }

  const Scene* scene() const override { return &scene_; }
  const GoalSpec& goal() const { return goal_; }
  const EnvConfig& config() const { return config_; }

 private:
  GoalSpec goal_;
  EnvConfig config_;
  Rng rng_;
  Scene scene_;
};

}  // namespace qac

#endif  // QAC_TASK_HPP_

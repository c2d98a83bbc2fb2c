#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "qac/ane_curiosity.hpp"
#include "qac/task.hpp"

namespace qac {
namespace {

std::multiset<QuestionAST> all_questions(const ActiveSet& d) {
  std::multiset<QuestionAST> out;
  for (const auto& slot : d.slots) out.insert(slot.begin(), slot.end());
  return out;
}

AnEConfig hop_config(int hop, long m = 0) {
  AnEConfig c;
  c.hop = hop;
  c.reservoir_size = m;
  return c;
}

TEST(InitReservoir, HopOneHoldsEveryQuestion) {
  const Reservoir r = init_reservoir(sparse_ordering_goal(), {},
                                     hop_config(1, 80), 0);
  ASSERT_EQ(r.questions.size(), 80u);
  std::set<QuestionAST> got(r.questions.begin(), r.questions.end());
  std::set<QuestionAST> all(enumerate_questions(1).begin(),
                            enumerate_questions(1).end());
  EXPECT_EQ(got, all);
  for (const auto& [q, c] : r.flip_counters) EXPECT_EQ(c, 0);
}

TEST(InitReservoir, OversizedIsConfigError) {
  EXPECT_THROW(init_reservoir(sparse_ordering_goal(), {}, hop_config(1, 81), 0),
               ConfigError);
  EXPECT_THROW(
      init_reservoir(sparse_ordering_goal(), {}, hop_config(2, 961), 0),
      ConfigError);
}

TEST(InitReservoir, PartialReservoirIsDistinctAndDeterministic) {
  const auto a = init_reservoir(default_dense_goal(), {}, hop_config(3, 500), 9);
  const auto b = init_reservoir(default_dense_goal(), {}, hop_config(3, 500), 9);
  const auto c = init_reservoir(default_dense_goal(), {}, hop_config(3, 500), 10);
  EXPECT_EQ(a.questions, b.questions);
  EXPECT_NE(a.questions, c.questions);
  std::set<QuestionAST> unique(a.questions.begin(), a.questions.end());
  EXPECT_EQ(unique.size(), 500u);
}

TEST(InitActiveSet, HopTwoDrawLeaves832) {
  Reservoir r = init_reservoir(sparse_ordering_goal(), {}, hop_config(2), 1);
  ASSERT_EQ(r.questions.size(), 960u);
  Rng rng(2);
  const ActiveSet d = init_active_set(r, 1, 128, rng);
  EXPECT_EQ(d.slots.size(), 128u);
  EXPECT_EQ(d.question_count(), 128u);
  EXPECT_EQ(r.questions.size(), 832u);
  const auto active = all_questions(d);
  EXPECT_EQ(std::set<QuestionAST>(active.begin(), active.end()).size(), 128u);
  for (const auto& q : r.questions) EXPECT_EQ(active.count(q), 0u);
}

TEST(InitActiveSet, HopOneCannotFill128Slots) {
  Reservoir r = init_reservoir(sparse_ordering_goal(), {}, hop_config(1), 1);
  Rng rng(2);
  EXPECT_THROW(init_active_set(r, 1, 128, rng), ConfigError);
}

TEST(InitActiveSet, DrawIsUniform) {
  // Draw one question from a 10-question pool many times; each index should
  // be chosen about 1/10 of the time (3 sigma band).
  const auto& pool = enumerate_questions(1);
  std::vector<QuestionAST> ten(pool.begin(), pool.begin() + 10);
  std::map<QuestionAST, int> hits;
  Rng rng(77);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    Reservoir r = init_reservoir(ten);
    const ActiveSet d = init_active_set(r, 1, 1, rng);
    ++hits[d.slots[0][0]];
  }
  const double p = 0.1;
  const double sigma = std::sqrt(trials * p * (1 - p));
  for (const auto& q : ten)
    EXPECT_NEAR(hits[q], trials * p, 3 * sigma) << render_question(q);
}

TEST(BeginRollout, PermutesSlotsAndKeepsGrouping) {
  Reservoir r = init_reservoir(sparse_ordering_goal(), {}, hop_config(2), 3);
  Rng rng(4);
  ActiveSet d = init_active_set(r, 2, 16, rng);
  const auto before = d;
  std::set<std::vector<QuestionAST>> groups(before.slots.begin(),
                                            before.slots.end());
  Rng r1(99), r2(99);
  ActiveSet a = d, b = d;
  begin_rollout(a, r1);
  begin_rollout(b, r2);
  EXPECT_EQ(a.slots, b.slots);
  EXPECT_NE(a.slots, before.slots);
  EXPECT_EQ(all_questions(a), all_questions(before));
  for (const auto& slot : a.slots) {
    EXPECT_EQ(slot.size(), 2u);
    EXPECT_TRUE(groups.count(slot));
  }
}

QuestionAST one_hop(Color s, Color o, Relation r) {
  QuestionAST q;
  q.hops = 1;
  q.atoms.push_back({{s, Material::kRubber}, {o, Material::kRubber}, r});
  return q;
}

TEST(StepIntrinsic, NullTransitionIsZero) {
  const Scene s = reset(sparse_ordering_goal(), 0);
  const auto& qs = enumerate_questions(2);
  const auto r = step_intrinsic(s, s, std::span(qs.data(), 8));
  EXPECT_EQ(r.intrinsic_reward, 0);
  EXPECT_EQ(std::count(r.flipped.begin(), r.flipped.end(), true), 0);
}

TEST(StepIntrinsic, CrossingFlipsOneQuestion) {
  std::array<Vec2, kNumObjects> pos = {Vec2{-0.1, 0}, Vec2{0, 0.6},
                                       Vec2{0.6, 0.6}, Vec2{-0.6, -0.6},
                                       Vec2{0.6, -0.6}};
  const Scene before = make_scene(pos);
  const Scene after = step(before, {0, Direction::kN}, {});
  // A north push keeps cyan left of purple; an east push crosses it.
  const Scene crossed = step(before, {0, Direction::kE}, {});
  const std::vector<QuestionAST> q = {
      one_hop(Color::kCyan, Color::kPurple, Relation::kLeftOf)};
  EXPECT_EQ(step_intrinsic(before, after, q).intrinsic_reward, 0);
  const auto r = step_intrinsic(before, crossed, q);
  EXPECT_EQ(r.intrinsic_reward, 1);
  EXPECT_TRUE(r.flipped[0]);
}

TEST(StepIntrinsic, ThreeQuestionsTwoFlipsAgainstOracle) {
  std::array<Vec2, kNumObjects> pos = {Vec2{-0.1, -0.05}, Vec2{0, 0.6},
                                       Vec2{0.6, 0.6}, Vec2{-0.6, -0.6},
                                       Vec2{0.05, 0.0}};
  const Scene before = make_scene(pos);
  Scene after = before;
  after.objects[0].position = {0.1, 0.05};  // crosses purple in x, red in x/y
  const std::vector<QuestionAST> q = {
      one_hop(Color::kCyan, Color::kPurple, Relation::kLeftOf),
      one_hop(Color::kCyan, Color::kRed, Relation::kInFrontOf),
      one_hop(Color::kGreen, Color::kBlue, Relation::kRightOf)};
  const auto r = step_intrinsic(before, after, q);
  int oracle = 0;
  for (const auto& qq : q) {
    const auto& a = qq.atoms[0];
    const auto& sb = before.object(a.subject.color).position;
    const auto& ob = before.object(a.object.color).position;
    const auto& sa = after.object(a.subject.color).position;
    const auto& oa = after.object(a.object.color).position;
    bool vb = false, va = false;
    switch (a.relation) {
      case Relation::kLeftOf: vb = sb.x < ob.x; va = sa.x < oa.x; break;
      case Relation::kRightOf: vb = sb.x > ob.x; va = sa.x > oa.x; break;
      case Relation::kInFrontOf: vb = sb.y < ob.y; va = sa.y < oa.y; break;
      case Relation::kBehind: vb = sb.y > ob.y; va = sa.y > oa.y; break;
    }
    oracle += vb != va;
  }
  EXPECT_EQ(oracle, 2);
  EXPECT_EQ(r.intrinsic_reward, 2);
  EXPECT_EQ(r.flipped, (std::vector<bool>{true, true, false}));
}

struct Harness {
  Reservoir reservoir;
  ActiveSet active;
};

// One active question in one slot plus `spare` questions waiting in S.
Harness single_slot(std::size_t spare) {
  const auto& pool = enumerate_questions(2);
  Harness h;
  h.reservoir = init_reservoir(
      std::vector<QuestionAST>(pool.begin(), pool.begin() + 1 + spare));
  h.active.n = 1;
  h.active.slots = {{h.reservoir.questions.front()}};
  h.reservoir.questions.pop_front();
  return h;
}

TEST(ApplyReplacement, AlphaOneBoundaryReplaces) {
  Harness h = single_slot(3);
  const QuestionAST q = h.active.slots[0][0];
  h.reservoir.flip_counters[q] = 4;  // flipped in each of rollouts 1..4
  const auto rep = apply_replacement(h.active, 0, h.reservoir, {true}, 5, 1.0);
  ASSERT_EQ(rep.size(), 1u);
  EXPECT_EQ(rep[0].first, q);
  EXPECT_EQ(h.reservoir.flip_counters.at(q), 5);
  EXPECT_NE(h.active.slots[0][0], q);
  EXPECT_EQ(h.reservoir.questions.size(), 2u);
}

TEST(ApplyReplacement, BelowThresholdRetained) {
  Harness h = single_slot(3);
  const QuestionAST q = h.active.slots[0][0];
  h.reservoir.flip_counters[q] = 4;
  const auto rep = apply_replacement(h.active, 0, h.reservoir, {true}, 10, 0.6);
  EXPECT_TRUE(rep.empty());
  EXPECT_EQ(h.reservoir.flip_counters.at(q), 5);
  EXPECT_EQ(h.active.slots[0][0], q);
}

TEST(ApplyReplacement, ReplacementComesFromReservoirFront) {
  Harness h = single_slot(3);
  const QuestionAST front = h.reservoir.questions.front();
  apply_replacement(h.active, 0, h.reservoir, {true}, 1, 0.6);
  EXPECT_EQ(h.active.slots[0][0], front);
  EXPECT_EQ(h.reservoir.flip_counters.at(front), 0);
  EXPECT_FALSE(h.reservoir.contains(front));
}

TEST(ApplyReplacement, UnflippedQuestionsUntouched) {
  Harness h = single_slot(3);
  const QuestionAST q = h.active.slots[0][0];
  EXPECT_TRUE(apply_replacement(h.active, 0, h.reservoir, {false}, 1, 0.5).empty());
  EXPECT_EQ(h.reservoir.flip_counters.at(q), 0);
}

TEST(ApplyReplacement, EmptyReservoirKeepsQuestionAndResetsCounter) {
  Harness h = single_slot(0);
  const QuestionAST q = h.active.slots[0][0];
  const auto rep = apply_replacement(h.active, 0, h.reservoir, {true}, 1, 0.6);
  EXPECT_TRUE(rep.empty());
  EXPECT_EQ(h.active.slots[0][0], q);
  EXPECT_EQ(h.reservoir.flip_counters.at(q), 0);
  EXPECT_EQ(h.reservoir.exhausted_events, 1);
}

TEST(ApplyReplacement, ContractChecks) {
  Harness h = single_slot(1);
  EXPECT_THROW(apply_replacement(h.active, 0, h.reservoir, {true}, 0, 0.6),
               ContractError);
  EXPECT_THROW(apply_replacement(h.active, 1, h.reservoir, {true}, 1, 0.6),
               ContractError);
  EXPECT_THROW(apply_replacement(h.active, 0, h.reservoir, {true, true}, 1, 0.6),
               ContractError);
}

// Runs `rollouts` samples of one question; flips[b-1] says whether sample b
// flipped. Returns the 1-based rollout of the replacement or 0.
long replay(const std::vector<bool>& flips, double alpha) {
  Harness h = single_slot(4);
  for (std::size_t b = 1; b <= flips.size(); ++b) {
    const auto rep = apply_replacement(h.active, 0, h.reservoir, {flips[b - 1]},
                                       static_cast<long>(b), alpha);
    if (!rep.empty()) return static_cast<long>(b);
  }
  return 0;
}

TEST(ApplyReplacement, SixHundredFiftyOfThousandIsReplaced) {
  std::vector<bool> late(1000, false);
  std::fill(late.begin() + 350, late.end(), true);
  // C/beta reaches 0.6 once (beta - 350) >= 0.6 beta, i.e. beta = 875.
  EXPECT_EQ(replay(late, 0.6), 875);

  std::vector<bool> spread(1000);
  int c = 0;
  for (int b = 1; b <= 1000; ++b) {
    const int want = static_cast<int>(std::floor(0.65 * b));
    spread[b - 1] = want > c;
    c = want;
  }
  EXPECT_EQ(std::count(spread.begin(), spread.end(), true), 650);
  EXPECT_GT(replay(spread, 0.6), 0);
}

TEST(ApplyReplacement, FiveHundredOfThousandIsRetained) {
  std::vector<bool> late(1000, false);
  std::fill(late.begin() + 500, late.end(), true);
  EXPECT_EQ(replay(late, 0.6), 0);
  std::vector<bool> alternating(1000);
  for (int b = 1; b <= 1000; ++b) alternating[b - 1] = b % 2 == 0;
  EXPECT_EQ(replay(alternating, 0.6), 0);
}

TEST(AutoSlotCount, FullRolloutWhenReservoirAllows) {
  EXPECT_EQ(auto_slot_count(1, 128, 960), 128);
  EXPECT_EQ(auto_slot_count(4, 128, 7680), 128);
  EXPECT_EQ(auto_slot_count(1, 128, 80), 32);
  EXPECT_EQ(auto_slot_count(4, 128, 80), 8);
  EXPECT_THROW(auto_slot_count(50, 128, 80), ConfigError);
}

TEST(AneCuriosity, RolloutInvariantsAndConservation) {
  AnEConfig cfg;
  cfg.hop = 1;
  cfg.n = 2;
  const int k = 32;
  SceneEnv env(sparse_ordering_goal(), {}, 5);
  AneCuriosity ane(cfg, k, sparse_ordering_goal(), {}, 5);
  const std::size_t total = ane.reservoir().questions.size() +
                            ane.active_set().question_count();
  EXPECT_EQ(total, 80u);
  Rng rng(6);
  for (int rollout = 1; rollout <= 40; ++rollout) {
    ane.begin_rollout(rollout);
    for (int t = 0; t < k; ++t) {
      const Scene before = *env.scene();
      const auto obs = state_vector(before);
      const int action = static_cast<int>(rng.below(kNumActions));
      const auto out = env.step(action);
      const Scene after = *env.scene();
      StepView v{t, obs, out.observation, action, &before, &after};
      const double r = ane.intrinsic(v);
      ASSERT_GE(r, 0);
      ASSERT_LE(r, cfg.n);
      ASSERT_EQ(static_cast<int>(r),
                std::count(ane.last_step().flipped.begin(),
                           ane.last_step().flipped.end(), true));
      if (before == after) {
        ASSERT_EQ(r, 0);
      }
      if (out.done) env.reset();
    }
    ane.end_rollout({});
    const auto& res = ane.reservoir();
    ASSERT_EQ(res.questions.size() + ane.active_set().question_count() +
                  res.retired.size(),
              total);
    // Active questions that were never replaced stay under the threshold.
    for (const auto& slot : ane.active_set().slots)
      for (const auto& q : slot)
        ASSERT_LT(static_cast<double>(res.flip_counters.at(q)) /
                      (rollout * ane.samples_per_rollout()),
                  cfg.alpha);
  }
  EXPECT_GT(ane.log().back().rollout_index, 0);
}

std::vector<std::pair<double, int>> trace(std::uint64_t seed) {
  AnEConfig cfg;
  cfg.hop = 2;
  SceneEnv env(default_dense_goal(), {}, seed);
  AneCuriosity ane(cfg, 128, default_dense_goal(), {}, seed);
  Rng rng(seed);
  std::vector<std::pair<double, int>> out;
  for (int rollout = 1; rollout <= 5; ++rollout) {
    ane.begin_rollout(rollout);
    for (int t = 0; t < 128; ++t) {
      const Scene before = *env.scene();
      const int action = static_cast<int>(rng.below(kNumActions));
      const auto o = env.step(action);
      const Scene after = *env.scene();
      StepView v{t, {}, {}, action, &before, &after};
      const double r = ane.intrinsic(v);
      out.emplace_back(r, static_cast<int>(ane.last_step().replacements.size()));
      if (o.done) env.reset();
    }
    ane.end_rollout({});
  }
  return out;
}

TEST(AneCuriosity, ReproducibleFromSeed) {
  EXPECT_EQ(trace(3), trace(3));
  EXPECT_NE(trace(3), trace(4));
}

TEST(AneConfig, Validation) {
  AnEConfig c;
  c.alpha = 0.3;
  EXPECT_THROW(validate(c), ConfigError);
  c.alpha = 1.2;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.n = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.hop = 4;
  EXPECT_THROW(validate(c), ConfigError);
}

}  // namespace
}  // namespace qac

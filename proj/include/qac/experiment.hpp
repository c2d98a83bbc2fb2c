#ifndef QAC_EXPERIMENT_HPP_
#define QAC_EXPERIMENT_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qac/ane_curiosity.hpp"
#include "qac/baseline_curiosity.hpp"
#include "qac/config.hpp"
#include "qac/ppo.hpp"
#include "qac/question.hpp"
#include "qac/task.hpp"

namespace qac {

namespace fs = std::filesystem;

inline GoalSpec goal_for(TaskKind task) {
  return task == TaskKind::kDense ? default_dense_goal()
                                  : sparse_ordering_goal();
}

inline std::unique_ptr<CuriosityModule> make_curiosity(
    const ExperimentConfig& c, const Environment& env, std::uint64_t seed,
    const std::vector<QuestionAST>* pool = nullptr) {
  const auto obs = static_cast<std::size_t>(env.observation_size());
  const auto actions = static_cast<std::size_t>(env.action_count());
  switch (c.method) {
    case CuriosityMethod::kNone:
      return std::make_unique<NoCuriosity>();
    case CuriosityMethod::kAne: {
      AnEConfig a = c.ane;
      a.relation_margin = c.env.relation_margin;
      return std::make_unique<AneCuriosity>(a, c.trainer.rollout_length,
                                            goal_for(c.task), c.env,
                                            mix_seed(seed, 0xc0), pool);
    }
    case CuriosityMethod::kIcm:
      return std::make_unique<IcmCuriosity>(obs, actions, c.icm,
                                            c.effective_epochs(), c.env,
                                            mix_seed(seed, 0xc1));
    case CuriosityMethod::kRnd:
      return std::make_unique<RndCuriosity>(obs, c.rnd, c.effective_epochs(),
                                            c.env, mix_seed(seed, 0xc2));
  }
  throw ConfigError("unsupported curiosity method");
}

inline std::string metrics_header() {
  return "rollout_index,env_steps,mean_extrinsic_return,success_rate,"
         "mean_intrinsic,replacements";
}

inline std::string metrics_row(const RolloutMetrics& m) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%ld,%ld,%.6f,%.6f,%.6f,%d", m.rollout_index,
                m.env_steps, m.mean_extrinsic_return, m.success_rate,
                m.mean_intrinsic, m.replacements);
  return buf;
}

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  fs::path metrics_path;
  std::vector<RolloutMetrics> metrics;
  double wall_seconds = 0.0;
};

struct RunCallbacks {
  // Called after every rollout; must be thread-safe when jobs > 1.
  std::function<void(std::uint64_t seed, const RolloutMetrics&)> on_rollout;
};

inline fs::path run_directory(const ExperimentConfig& c) {
  return fs::path(c.output_dir) / c.effective_label();
}

// Trains one seed and streams its CSVs into `dir`.
inline SeedResult run_seed(const ExperimentConfig& c, std::uint64_t seed,
                           const fs::path& dir,
                           const std::vector<QuestionAST>* pool = nullptr,
                           const RunCallbacks& callbacks = {}) {
  SeedResult result;
  result.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  const std::string tag = "seed_" + std::to_string(seed);
  result.metrics_path = dir / (tag + ".csv");

  SceneEnv env(goal_for(c.task), c.env, mix_seed(seed, 0xe1));
  auto curiosity = make_curiosity(c, env, seed, pool);
  TrainerConfig tc = c.trainer;
  tc.epochs = c.effective_epochs();
  Trainer trainer(env, *curiosity, tc, seed);

  std::ofstream metrics(result.metrics_path);
  std::ofstream timing(dir / (tag + "_timing.csv"));
  if (!metrics || !timing)
    throw ConfigError("cannot write into " + dir.string());
  metrics << metrics_header() << "\n";
  timing << "rollout_index,wall_seconds\n";
  auto* ane = dynamic_cast<AneCuriosity*>(curiosity.get());
  std::ofstream ane_log;
  if (ane) {
    ane_log.open(dir / (tag + "_curiosity.csv"));
    ane_log << "rollout_index,total_intrinsic,replacements_count,"
               "reservoir_remaining\n";
  }

  for (int r = 0; r < tc.rollouts; ++r) {
    const RolloutMetrics m = trainer.run_rollout();
    metrics << metrics_row(m) << "\n";
    const double elapsed = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    timing << m.rollout_index << "," << elapsed << "\n";
    if (ane) {
      const auto& rec = ane->log().back();
      ane_log << rec.rollout_index << "," << rec.total_intrinsic << ","
              << rec.replacements_count << "," << rec.reservoir_remaining
              << "\n";
    }
    if (tc.checkpoint_interval > 0 &&
        m.rollout_index % tc.checkpoint_interval == 0) {
      save_policy((dir / (tag + "_rollout_" + std::to_string(m.rollout_index) +
                          ".ckpt"))
                      .string(),
                  trainer.policy());
    }
    if (callbacks.on_rollout) callbacks.on_rollout(seed, m);
    result.metrics.push_back(m);
  }
  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  result.ok = true;
  return result;
}

// Runs every configured seed on a pool of `jobs` threads. A failing seed is
// recorded (and an error file written) without stopping the others.
inline std::vector<SeedResult> run_experiment(const ExperimentConfig& c,
                                              const RunCallbacks& callbacks = {}) {
  validate(c);
  const fs::path dir = run_directory(c);
  fs::create_directories(dir);
  {
    std::ofstream echo(dir / "config.ini");
    echo << dump_config(c);
  }
  std::vector<QuestionAST> pool;
  const bool use_pool = !c.question_file.empty();
  if (use_pool) pool = read_question_file(c.question_file);

  std::vector<SeedResult> results(c.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < c.seeds.size(); i = next++) {
      const auto seed = c.seeds[i];
      try {
        results[i] = run_seed(c, seed, dir, use_pool ? &pool : nullptr,
                              callbacks);
      } catch (const std::exception& e) {
        results[i].seed = seed;
        results[i].ok = false;
        results[i].error = e.what();
        std::ofstream err(dir / ("seed_" + std::to_string(seed) + ".error"));
        err << e.what() << "\n";
      }
    }
  };
  const std::size_t jobs =
      std::min<std::size_t>(static_cast<std::size_t>(c.jobs), c.seeds.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return results;
}

// ---------------------------------------------------------------------------
// Suite presets

inline std::vector<ExperimentConfig> suite_preset(const std::string& name,
                                                  const ExperimentConfig& base) {
  std::vector<ExperimentConfig> out;
  auto add = [&](TaskKind task, CuriosityMethod method, int hop, int n,
                 bool extrinsic) {
    ExperimentConfig c = base;
    c.task = task;
    c.method = method;
    c.ane.hop = hop;
    c.ane.n = n;
    c.trainer.extrinsic_enabled = extrinsic;
    c.label.clear();
    out.push_back(c);
  };
  const CuriosityMethod all[] = {CuriosityMethod::kNone, CuriosityMethod::kIcm,
                                 CuriosityMethod::kRnd, CuriosityMethod::kAne};
  const TaskKind tasks[] = {TaskKind::kDense, TaskKind::kSparse};
  if (name == "sparsity") {
    for (auto t : tasks)
      for (auto m : all) add(t, m, base.ane.hop, base.ane.n, true);
  } else if (name == "complexity") {
    for (auto t : tasks)
      for (int hop = 1; hop <= 3; ++hop)
        add(t, CuriosityMethod::kAne, hop, base.ane.n, true);
  } else if (name == "density") {
    for (auto t : tasks)
      for (int n : {1, 2, 4}) add(t, CuriosityMethod::kAne, base.ane.hop, n, true);
  } else if (name == "pure") {
    for (auto t : tasks)
      for (auto m : {CuriosityMethod::kIcm, CuriosityMethod::kRnd,
                     CuriosityMethod::kAne})
        add(t, m, base.ane.hop, base.ane.n, false);
  } else {
    throw ConfigError("unknown suite preset '" + name +
                      "' (expected sparsity, complexity, density or pure)");
  }
  return out;
}

}  // namespace qac

#endif  // QAC_EXPERIMENT_HPP_

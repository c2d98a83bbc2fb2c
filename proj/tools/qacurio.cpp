// qacurio: train, sweep, aggregate and plot curiosity experiments.

#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "qac/config.hpp"
#include "qac/experiment.hpp"
#include "qac/question.hpp"
#include "qac/report.hpp"

namespace {

// Flags that map onto config keys. Values are applied after the config file.
struct FlagBinding {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FlagBinding kFlags[] = {
    {"--task", "task", "dense or sparse"},
    {"--method", "method", "ppo, icm, rnd or ane"},
    {"--hop", "ane.hop", "question hop count (1, 2, 3)"},
    {"--n", "ane.n", "questions per step"},
    {"--alpha", "ane.alpha", "flip-frequency retirement threshold"},
    {"--reservoir-size", "ane.reservoir_size", "reservoir size M (0 = all)"},
    {"--seeds", "seeds", "comma-separated seed list"},
    {"--rollouts", "trainer.rollouts", "number of rollouts"},
    {"--rollout-length", "trainer.rollout_length", "steps per rollout"},
    {"--epochs", "trainer.epochs", "optimisation epochs per rollout"},
    {"--lr", "trainer.lr", "policy learning rate"},
    {"--extrinsic", "extrinsic_enabled", "true/false"},
    {"--checkpoint-interval", "trainer.checkpoint_interval",
     "rollouts between policy checkpoints"},
    {"--output", "output_dir", "output directory"},
    {"--label", "label", "run directory name"},
    {"--jobs", "jobs", "parallel seed workers"},
    {"--question-file", "question_file", "AnE question pool file"},
};

struct CommonOptions {
  std::string config_file;
  std::vector<std::pair<const char*, std::string>> flag_values;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("--config", opts.config_file, "INI-style config file");
  opts.flag_values.reserve(std::size(kFlags));
  for (const auto& f : kFlags) {
    opts.flag_values.emplace_back(f.key, "");
    app->add_option(f.flag, opts.flag_values.back().second, f.help);
  }
  app->add_option("--set", opts.sets, "arbitrary override section.key=value");
}

qac::ExperimentConfig resolve(const CommonOptions& opts) {
  qac::ExperimentConfig c;
  if (!opts.config_file.empty()) c = qac::load_config_file(opts.config_file);
  for (std::size_t i = 0; i < opts.flag_values.size(); ++i) {
    const auto& [key, value] = opts.flag_values[i];
    if (value.empty()) continue;
    try {
      qac::set_config_value(c, key, value);
    } catch (const qac::ConfigError& e) {
      throw qac::ConfigError(std::string(kFlags[i].flag) + ": " + e.what());
    }
  }
  for (const auto& s : opts.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw qac::ConfigError("--set " + s + ": expected section.key=value");
    try {
      qac::set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
    } catch (const qac::ConfigError& e) {
      throw qac::ConfigError("--set: " + std::string(e.what()));
    }
  }
  qac::validate(c);
  return c;
}

int report(const std::vector<qac::SeedResult>& results) {
  int failures = 0;
  for (const auto& r : results) {
    if (r.ok) {
      const auto& last = r.metrics.back();
      std::printf("seed %llu: success %.3f return %.3f (%.1fs) -> %s\n",
                  static_cast<unsigned long long>(r.seed), last.success_rate,
                  last.mean_extrinsic_return, r.wall_seconds,
                  r.metrics_path.string().c_str());
    } else {
      ++failures;
      std::printf("seed %llu: FAILED: %s\n",
                  static_cast<unsigned long long>(r.seed), r.error.c_str());
    }
  }
  return failures;
}

qac::RunCallbacks progress(int every) {
  static std::mutex mu;
  qac::RunCallbacks cb;
  if (every > 0)
    cb.on_rollout = [every](std::uint64_t seed, const qac::RolloutMetrics& m) {
      if (m.rollout_index % every != 0) return;
      std::lock_guard<std::mutex> lock(mu);
      std::fprintf(stderr, "  seed %llu rollout %ld success %.3f ri %.4f\n",
                   static_cast<unsigned long long>(seed), m.rollout_index,
                   m.success_rate, m.mean_intrinsic);
    };
  return cb;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Question-answering curiosity experiments"};
  app.require_subcommand(1);
  int progress_every = 100;
  app.add_option("--progress", progress_every,
                 "print progress every N rollouts (0 = quiet)");

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "train one configuration");
  add_common(run, run_opts);

  CommonOptions suite_opts;
  std::string preset;
  auto* suite = app.add_subcommand("suite", "run a preset sweep");
  suite->add_option("preset", preset, "sparsity, complexity, density or pure")
      ->required();
  add_common(suite, suite_opts);

  std::string agg_dir;
  auto* aggregate = app.add_subcommand("aggregate", "mean/std across seeds");
  aggregate->add_option("dir", agg_dir)->required();

  std::string plot_dir;
  std::vector<std::string> metrics = {"success_rate", "mean_extrinsic_return",
                                      "mean_intrinsic"};
  auto* plot = app.add_subcommand("plot", "write SVG learning curves");
  plot->add_option("dir", plot_dir)->required();
  plot->add_option("--metric", metrics, "metric column(s) to plot");

  int hop = 2;
  std::string question_out;
  auto* questions =
      app.add_subcommand("questions", "write every question of a hop class");
  questions->add_option("--hop", hop)->check(CLI::Range(1, 3));
  questions->add_option("--out", question_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto c = resolve(run_opts);
      std::printf("running %s -> %s\n", c.effective_label().c_str(),
                  qac::run_directory(c).string().c_str());
      return report(qac::run_experiment(c, progress(progress_every))) ? 1 : 0;
    }
    if (*suite) {
      const auto base = resolve(suite_opts);
      int failures = 0;
      for (const auto& c : qac::suite_preset(preset, base)) {
        std::printf("== %s\n", c.effective_label().c_str());
        failures += report(qac::run_experiment(c, progress(progress_every)));
      }
      qac::aggregate_directory(base.output_dir);
      for (const auto& m : metrics)
        std::printf("wrote %s\n",
                    qac::plot_directory(base.output_dir, m).string().c_str());
      return failures ? 1 : 0;
    }
    if (*aggregate) {
      for (const auto& p : qac::aggregate_directory(agg_dir))
        std::printf("wrote %s\n", p.string().c_str());
      return 0;
    }
    if (*plot) {
      for (const auto& m : metrics)
        std::printf("wrote %s\n",
                    qac::plot_directory(plot_dir, m).string().c_str());
      return 0;
    }
    if (*questions) {
      qac::write_question_file(question_out, qac::enumerate_questions(hop));
      std::printf("wrote %zu questions to %s\n", qac::question_count(hop),
                  question_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

#ifndef QAC_CURIOSITY_HPP_
#define QAC_CURIOSITY_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qac/errors.hpp"
#include "qac/scene.hpp"

namespace qac {

struct Transition {
  std::vector<double> observation;
  std::vector<double> next_observation;  // pre-reset on episode end
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double extrinsic = 0.0;
  double intrinsic = 0.0;
  bool done = false;
  bool success = false;
  std::optional<Scene> scene;
  std::optional<Scene> next_scene;
};

// What a curiosity module sees for one environment step.
struct StepView {
  int step_in_rollout = 0;
  std::span<const double> observation;
  std::span<const double> next_observation;
  int action = 0;
  const Scene* scene_before = nullptr;
  const Scene* scene_after = nullptr;
};

// Per-rollout bookkeeping a module may export for logging.
struct CuriosityRolloutStats {
  double total_intrinsic = 0.0;
  int replacements = 0;
  long reservoir_remaining = -1;  // -1 when not applicable
};

enum class CuriosityMethod : std::uint8_t { kNone, kAne, kIcm, kRnd };

inline std::string_view to_string(CuriosityMethod m) {
  switch (m) {
    case CuriosityMethod::kNone: return "none";
    case CuriosityMethod::kAne: return "ane";
    case CuriosityMethod::kIcm: return "icm";
    case CuriosityMethod::kRnd: return "rnd";
  }
  return "none";
}

// Accepts the config selector strings; "ppo" is an alias for "none".
inline CuriosityMethod curiosity_method_from_string(std::string_view s) {
  if (s == "none" || s == "ppo") return CuriosityMethod::kNone;
  if (s == "ane") return CuriosityMethod::kAne;
  if (s == "icm") return CuriosityMethod::kIcm;
  if (s == "rnd") return CuriosityMethod::kRnd;
  throw ConfigError("unknown curiosity method '" + std::string(s) +
                    "' (expected none, ane, icm or rnd)");
}

// Intrinsic reward source driven by the rollout loop: begin_rollout, then
// one intrinsic() per step in order, then end_rollout with the batch.
class CuriosityModule {
 public:
  virtual ~CuriosityModule() = default;

  virtual CuriosityMethod method() const = 0;
  virtual void begin_rollout(int rollout_index) { (void)rollout_index; }
  virtual double intrinsic(const StepView& view) = 0;
  virtual void end_rollout(std::span<const Transition> batch) { (void)batch; }
  virtual CuriosityRolloutStats rollout_stats() const { return stats_; }

 protected:
  CuriosityRolloutStats stats_;
};

class NoCuriosity : public CuriosityModule {
 public:
  CuriosityMethod method() const override { return CuriosityMethod::kNone; }
  double intrinsic(const StepView&) override { return 0.0; }
};

}  // namespace qac

#endif  // QAC_CURIOSITY_HPP_

#ifndef QAC_ENVIRONMENT_HPP_
#define QAC_ENVIRONMENT_HPP_

#include <vector>

#include "qac/scene.hpp"

namespace qac {

struct StepOutcome {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

// Episodic discrete-action environment driven by the trainer.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int observation_size() const = 0;
  virtual int action_count() const = 0;

  // start a new episode
  virtual std::vector<double> reset() = 0;

  // advance one step; the returned observation is pre-reset on `done`
  virtual StepOutcome step(int action) = 0;

  // ground-truth scene when the environment has one
  virtual const Scene* scene() const { return nullptr; }
};

}  // namespace qac

#endif  // QAC_ENVIRONMENT_HPP_

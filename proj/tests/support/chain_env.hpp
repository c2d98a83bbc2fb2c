// Small deterministic environments for trainer sanity checks.
#ifndef QAC_TESTS_CHAIN_ENV_HPP_
#define QAC_TESTS_CHAIN_ENV_HPP_

#include <stdexcept>
#include <vector>

#include "qac/environment.hpp"

namespace qac::testing {

// States 0..length-1 with a one-hot observation. Action 1 moves right, action
// 0 moves left (floored at 0). Reaching the last state pays +1 and ends the
// episode; otherwise the episode times out after `max_steps`.
class ChainEnv : public Environment {
 public:
  explicit ChainEnv(int length = 10, int max_steps = 20)
      : length_(length), max_steps_(max_steps) {}

  int observation_size() const override { return length_; }
  int action_count() const override { return 2; }

  std::vector<double> reset() override {
    pos_ = 0;
    steps_ = 0;
    return obs();
  }

  StepOutcome step(int action) override {
    if (action != 0 && action != 1) throw std::out_of_range("chain action");
    pos_ = action == 1 ? pos_ + 1 : (pos_ > 0 ? pos_ - 1 : 0);
    ++steps_;
    StepOutcome out;
    out.observation = obs();
    out.success = pos_ == length_ - 1;
    out.reward = out.success ? 1.0 : 0.0;
    out.done = out.success || steps_ >= max_steps_;
    return out;
  }

 private:
  std::vector<double> obs() const {
    std::vector<double> v(length_, 0.0);
    v[pos_] = 1.0;
    return v;
  }

  int length_;
  int max_steps_;
  int pos_ = 0;
  int steps_ = 0;
};

// Raises on the given step count after reset.
class FailingEnv : public ChainEnv {
 public:
  explicit FailingEnv(int fail_at) : ChainEnv(10, 1000), fail_at_(fail_at) {}
  std::vector<double> reset() override {
    calls_ = 0;
    return ChainEnv::reset();
  }
  StepOutcome step(int action) override {
    if (calls_++ == fail_at_) throw std::runtime_error("simulated fault");
    return ChainEnv::step(action);
  }

 private:
  int fail_at_;
  int calls_ = 0;
};

}  // namespace qac::testing

#endif  // QAC_TESTS_CHAIN_ENV_HPP_

#ifndef QAC_CATEGORICAL_HPP_
#define QAC_CATEGORICAL_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qac/errors.hpp"
#include "qac/rng.hpp"

namespace qac {

inline double log_sum_exp(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - mx);
  return mx + std::log(s);
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  auto out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

// Entropy from log-probabilities.
inline double entropy_from_log_probs(std::span<const double> log_probs) {
  double h = 0.0;
  for (double lp : log_probs) h -= std::exp(lp) * lp;
  return h;
}

struct CategoricalSample {
  int action = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
};

inline void check_logits(std::span<const double> logits) {
  if (logits.empty()) throw ContractError("categorical over zero actions");
  for (double z : logits)
    if (!std::isfinite(z)) throw DivergenceError("non-finite policy logit");
}

// Inverse-CDF sampling from softmax(logits).
inline CategoricalSample categorical_head(std::span<const double> logits,
                                          Rng& rng) {
  check_logits(logits);
  const auto lp = log_softmax(logits);
  const double u = rng.uniform();
  double cdf = 0.0;
  int action = static_cast<int>(lp.size()) - 1;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    cdf += std::exp(lp[i]);
    if (u < cdf) {
      action = static_cast<int>(i);
      break;
    }
  }
  return {action, lp[action], entropy_from_log_probs(lp)};
}

}  // namespace qac

#endif  // QAC_CATEGORICAL_HPP_

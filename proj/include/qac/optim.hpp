#ifndef QAC_OPTIM_HPP_
#define QAC_OPTIM_HPP_

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qac/errors.hpp"
#include "qac/tensor.hpp"

namespace qac {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig hp;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  long step = 0;
};

inline AdamState make_adam(std::span<Tensor* const> params,
                           const AdamConfig& hp) {
  AdamState s;
  s.hp = hp;
  for (const Tensor* p : params) {
    s.first_moment.emplace_back(p->shape());
    s.second_moment.emplace_back(p->shape());
  }
  return s;
}

// Bias-corrected Adam. Rejects non-finite gradients before touching params.
inline void adam_step(std::span<Tensor* const> params,
                      std::span<Tensor* const> grads, AdamState& state) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size())
    throw ContractError("adam_step: parameter/gradient count mismatch");
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (grads[k]->shape() != params[k]->shape())
      throw ContractError("adam_step: gradient shape mismatch");
    if (!grads[k]->all_finite())
      throw DivergenceError("non-finite gradient in parameter tensor " +
                            std::to_string(k));
  }
  ++state.step;
  const auto& hp = state.hp;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->data();
    auto g = grads[k]->data();
    auto m = state.first_moment[k].data();
    auto v = state.second_moment[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
      v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
  }
}

inline double global_norm(std::span<Tensor* const> grads) {
  double sq = 0.0;
  for (const Tensor* g : grads)
    for (double v : g->data()) sq += v * v;
  return std::sqrt(sq);
}

// Rescales so the global L2 norm is at most max_norm; returns the prior norm.
inline double clip_global_norm(std::span<Tensor* const> grads,
                               double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor* g : grads)
      for (double& v : g->data()) v *= s;
  }
  return norm;
}

}  // namespace qac

#endif  // QAC_OPTIM_HPP_

#ifndef QAC_BASELINE_CURIOSITY_HPP_
#define QAC_BASELINE_CURIOSITY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "qac/categorical.hpp"
#include "qac/curiosity.hpp"
#include "qac/mlp.hpp"
#include "qac/optim.hpp"
#include "qac/rng.hpp"
#include "qac/scene.hpp"

namespace qac {

// Welford mean / variance.
class RunningStats {
 public:
  void push(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }
  long count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const {
    return count_ > 1 ? m2_ / static_cast<double>(count_) : 0.0;
  }
  double stddev() const { return std::sqrt(variance()); }

 private:
  long count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Network input for a curiosity model: the state vector, or the rasterized
// frame when image input is selected and a scene is available.
inline std::vector<double> curiosity_input(std::span<const double> obs,
                                           const Scene* scene, bool use_image,
                                           const EnvConfig& env) {
  if (use_image) {
    if (!scene) throw ContractError("image curiosity input needs a scene");
    return image_features(*scene, env);
  }
  return {obs.begin(), obs.end()};
}

// ===========================================================================
// ICM: encoder phi, inverse model (phi_t, phi_t+1) -> action logits, forward
// model (phi_t, onehot a) -> predicted phi_t+1. Reward is the forward error.

struct IcmConfig {
  std::size_t feature_dim = 32;
  std::size_t hidden = 64;
  double eta = 1.0;             // reward scale
  double forward_weight = 0.2;  // beta_f
  double lr = 1e-3;
  bool clip_intrinsic = false;
  bool use_image = false;
};

struct IcmTransition {
  std::vector<double> obs;
  int action = 0;
  std::vector<double> next_obs;
};

struct IcmLosses {
  double inverse = 0.0;
  double forward = 0.0;
};

struct IcmModel {
  IcmConfig config;
  std::size_t input_dim = 0;
  std::size_t action_count = 0;
  MlpParams encoder;
  MlpParams inverse_model;
  MlpParams forward_model;
  AdamState adam;

  IcmModel(std::size_t input, std::size_t actions, const IcmConfig& cfg,
           std::uint64_t seed)
      : config(cfg), input_dim(input), action_count(actions) {
    Rng rng(mix_seed(seed, 0x1c4));
    const std::size_t f = cfg.feature_dim;
    encoder = make_mlp({input, cfg.hidden, f}, Activation::kTanh, rng);
    inverse_model =
        make_mlp({2 * f, cfg.hidden, actions}, Activation::kTanh, rng);
    forward_model =
        make_mlp({f + actions, cfg.hidden, f}, Activation::kTanh, rng);
    auto params = parameters();
    adam = make_adam(params, AdamConfig{cfg.lr});
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> out;
    for (MlpParams* m : {&encoder, &inverse_model, &forward_model})
      for (Tensor* t : m->tensors()) out.push_back(t);
    return out;
  }
};

namespace detail {

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::matrix(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + a.cols());
  }
  return out;
}

inline Tensor one_hot_rows(std::span<const int> actions, std::size_t count) {
  Tensor out = Tensor::matrix(actions.size(), count);
  for (std::size_t r = 0; r < actions.size(); ++r) {
    if (actions[r] < 0 || static_cast<std::size_t>(actions[r]) >= count)
      throw InvalidActionError("action out of range for one-hot");
    out(r, actions[r]) = 1.0;
  }
  return out;
}

}  // namespace detail

// Encoded next features and forward-model prediction for one transition.
struct IcmFeatures {
  std::vector<double> predicted;
  std::vector<double> encoded_next;
};

inline IcmFeatures icm_features(const IcmModel& model,
                                std::span<const double> obs, int action,
                                std::span<const double> next_obs) {
  const auto phi = mlp_predict(model.encoder, obs);
  auto phi_next = mlp_predict(model.encoder, next_obs);
  std::vector<double> fin(phi.begin(), phi.end());
  fin.resize(phi.size() + model.action_count, 0.0);
  if (action < 0 || static_cast<std::size_t>(action) >= model.action_count)
    throw InvalidActionError("icm: action out of range");
  fin[phi.size() + action] = 1.0;
  return {mlp_predict(model.forward_model, fin), std::move(phi_next)};
}

inline double icm_intrinsic(const IcmModel& model, std::span<const double> obs,
                            int action, std::span<const double> next_obs) {
  const auto f = icm_features(model, obs, action, next_obs);
  double sq = 0.0;
  for (std::size_t i = 0; i < f.predicted.size(); ++i) {
    const double d = f.predicted[i] - f.encoded_next[i];
    sq += d * d;
  }
  const double r = 0.5 * model.config.eta * sq;
  return model.config.clip_intrinsic ? std::min(r, 1.0) : r;
}

// One Adam step on (1 - beta_f) * inverse cross-entropy + beta_f * forward
// error. The forward target phi_t+1 is held fixed; the encoder learns through
// both the inverse model and the forward model's input. Returns the losses
// before the step.
inline IcmLosses icm_update(IcmModel& model,
                            std::span<const IcmTransition> batch) {
  if (batch.empty()) throw ContractError("icm_update: empty batch");
  const std::size_t n = batch.size();
  const std::size_t f = model.config.feature_dim;
  const double beta = model.config.forward_weight;
  std::vector<std::vector<double>> obs_rows, next_rows;
  std::vector<int> actions;
  for (const auto& t : batch) {
    obs_rows.push_back(t.obs);
    next_rows.push_back(t.next_obs);
    actions.push_back(t.action);
  }
  const Tensor obs = stack_rows(obs_rows);
  const Tensor next = stack_rows(next_rows);
  const Tensor onehot = detail::one_hot_rows(actions, model.action_count);

  MlpTrace enc_t = mlp_forward(model.encoder, obs);
  MlpTrace enc_n = mlp_forward(model.encoder, next);
  const Tensor& phi = enc_t.output();
  const Tensor& phi_next = enc_n.output();

  MlpTrace inv = mlp_forward(model.inverse_model,
                             detail::concat_cols(phi, phi_next));
  MlpTrace fwd =
      mlp_forward(model.forward_model, detail::concat_cols(phi, onehot));

  IcmLosses losses;
  Tensor g_logits = Tensor::matrix(n, model.action_count);
  for (std::size_t r = 0; r < n; ++r) {
    const auto lp = log_softmax(inv.output().row(r));
    losses.inverse -= lp[actions[r]] / static_cast<double>(n);
    for (std::size_t a = 0; a < model.action_count; ++a)
      g_logits(r, a) = (1.0 - beta) *
                       (std::exp(lp[a]) - (static_cast<int>(a) == actions[r])) /
                       static_cast<double>(n);
  }
  Tensor g_pred = Tensor::matrix(n, f);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < f; ++k) {
      const double d = fwd.output()(r, k) - phi_next(r, k);
      losses.forward += 0.5 * d * d / static_cast<double>(n);
      g_pred(r, k) = beta * d / static_cast<double>(n);
    }
  }
  if (!std::isfinite(losses.inverse) || !std::isfinite(losses.forward))
    throw DivergenceError("icm: non-finite loss");

  MlpGradients g_inv = backward(inv, g_logits);
  MlpGradients g_fwd = backward(fwd, g_pred);
  Tensor g_phi = Tensor::matrix(n, f);
  Tensor g_phi_next = Tensor::matrix(n, f);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < f; ++k) {
      g_phi(r, k) = g_inv.input(r, k) + g_fwd.input(r, k);
      g_phi_next(r, k) = g_inv.input(r, f + k);
    }
  }
  MlpGradients g_enc = backward(enc_t, g_phi);
  MlpGradients g_enc_next = backward(enc_n, g_phi_next);
  for (std::size_t l = 0; l < g_enc.layers.size(); ++l) {
    auto& a = g_enc.layers[l];
    const auto& b = g_enc_next.layers[l];
    for (std::size_t i = 0; i < a.weight.size(); ++i) a.weight[i] += b.weight[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += b.bias[i];
  }
  std::vector<Tensor*> grads;
  for (MlpGradients* g : {&g_enc, &g_inv, &g_fwd})
    for (Tensor* t : g->tensors()) grads.push_back(t);
  auto params = model.parameters();
  adam_step(params, grads, model.adam);
  return losses;
}

// Fraction of the batch whose action is the inverse model's argmax.
inline double icm_inverse_accuracy(const IcmModel& model,
                                   std::span<const IcmTransition> batch) {
  if (batch.empty()) return 0.0;
  int correct = 0;
  for (const auto& t : batch) {
    auto phi = mlp_predict(model.encoder, t.obs);
    const auto phi_next = mlp_predict(model.encoder, t.next_obs);
    phi.insert(phi.end(), phi_next.begin(), phi_next.end());
    const auto logits = mlp_predict(model.inverse_model, phi);
    const auto best = std::max_element(logits.begin(), logits.end());
    if (best - logits.begin() == t.action) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

// ===========================================================================
// RND: frozen random target, trained predictor; reward is the squared
// embedding error, optionally divided by its running standard deviation.

struct RndConfig {
  std::size_t embed_dim = 64;
  std::size_t hidden = 64;
  double lr = 1e-3;
  bool normalize = true;
  bool clip_intrinsic = false;
  bool use_image = false;
};

struct RndModel {
  RndConfig config;
  MlpParams target;
  MlpParams predictor;
  AdamState adam;
  RunningStats reward_stats;

  RndModel(std::size_t input, const RndConfig& cfg, std::uint64_t seed)
      : config(cfg) {
    Rng target_rng(mix_seed(seed, 0x7a6));
    Rng pred_rng(mix_seed(seed, 0x94e));
    target = make_mlp({input, cfg.hidden, cfg.hidden, cfg.embed_dim},
                      Activation::kRelu, target_rng);
    predictor = make_mlp({input, cfg.hidden, cfg.hidden, cfg.embed_dim},
                         Activation::kRelu, pred_rng);
    auto params = predictor.tensors();
    adam = make_adam(params, AdamConfig{cfg.lr});
  }

  std::uint64_t target_fingerprint() const {
    const auto t = target.tensors();
    return fingerprint(t);
  }
};

inline double rnd_prediction_error(const RndModel& model,
                                   std::span<const double> obs) {
  const auto p = mlp_predict(model.predictor, obs);
  const auto t = mlp_predict(model.target, obs);
  double sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sq += (p[i] - t[i]) * (p[i] - t[i]);
  return sq;
}

// Updates the running statistics when normalization is on.
inline double rnd_intrinsic(RndModel& model, std::span<const double> obs) {
  double r = rnd_prediction_error(model, obs);
  if (model.config.normalize) {
    model.reward_stats.push(r);
    const double sd = model.reward_stats.stddev();
    if (model.reward_stats.count() > 1 && sd > 1e-12) r /= sd;
  }
  return model.config.clip_intrinsic ? std::min(r, 1.0) : r;
}

// One Adam step on the predictor's mean squared error; returns the loss
// before the step. The target is never touched.
inline double rnd_update(RndModel& model,
                         std::span<const std::vector<double>> batch) {
  if (batch.empty()) throw ContractError("rnd_update: empty batch");
  const Tensor obs =
      stack_rows(std::vector<std::vector<double>>(batch.begin(), batch.end()));
  const std::size_t n = obs.rows();
  const std::size_t e = model.config.embed_dim;
  MlpTrace pt = mlp_forward(model.predictor, obs);
  MlpTrace tt = mlp_forward(model.target, obs);
  Tensor g = Tensor::matrix(n, e);
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(n * e);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < e; ++k) {
      const double d = pt.output()(r, k) - tt.output()(r, k);
      loss += d * d * scale;
      g(r, k) = 2.0 * d * scale;
    }
  }
  if (!std::isfinite(loss)) throw DivergenceError("rnd: non-finite loss");
  MlpGradients grads = backward(pt, g);
  auto gl = grads.tensors();
  auto params = model.predictor.tensors();
  adam_step(params, gl, model.adam);
  return loss;
}

// ===========================================================================
// Rollout-loop adapters

class IcmCuriosity : public CuriosityModule {
 public:
  IcmCuriosity(std::size_t obs_dim, std::size_t action_count,
               const IcmConfig& config, int epochs, const EnvConfig& env,
               std::uint64_t seed)
      : model_(config.use_image ? kImageSize * kImageSize * 3 : obs_dim,
               action_count, config, seed),
        epochs_(epochs),
        env_(env) {}

  CuriosityMethod method() const override { return CuriosityMethod::kIcm; }

  void begin_rollout(int) override { stats_ = {}; }

  double intrinsic(const StepView& v) override {
    const auto a = input(v.observation, v.scene_before);
    const auto b = input(v.next_observation, v.scene_after);
    const double r = icm_intrinsic(model_, a, v.action, b);
    stats_.total_intrinsic += r;
    return r;
  }

  void end_rollout(std::span<const Transition> batch) override {
    std::vector<IcmTransition> data;
    data.reserve(batch.size());
    for (const auto& t : batch)
      data.push_back({input(t.observation, t.scene ? &*t.scene : nullptr),
                      t.action,
                      input(t.next_observation,
                            t.next_scene ? &*t.next_scene : nullptr)});
    for (int e = 0; e < epochs_; ++e) last_losses_ = icm_update(model_, data);
  }

  const IcmModel& model() const { return model_; }
  IcmLosses last_losses() const { return last_losses_; }

 private:
  std::vector<double> input(std::span<const double> obs,
                            const Scene* scene) const {
    return curiosity_input(obs, scene, model_.config.use_image, env_);
  }

  IcmModel model_;
  int epochs_;
  EnvConfig env_;
  IcmLosses last_losses_;
};

class RndCuriosity : public CuriosityModule {
 public:
  RndCuriosity(std::size_t obs_dim, const RndConfig& config, int epochs,
               const EnvConfig& env, std::uint64_t seed)
      : model_(config.use_image ? kImageSize * kImageSize * 3 : obs_dim,
               config, seed),
        epochs_(epochs),
        env_(env) {}

  CuriosityMethod method() const override { return CuriosityMethod::kRnd; }

  void begin_rollout(int) override { stats_ = {}; }

  double intrinsic(const StepView& v) override {
    const double r = rnd_intrinsic(
        model_, curiosity_input(v.next_observation, v.scene_after,
                                model_.config.use_image, env_));
    stats_.total_intrinsic += r;
    return r;
  }

  void end_rollout(std::span<const Transition> batch) override {
    std::vector<std::vector<double>> data;
    data.reserve(batch.size());
    for (const auto& t : batch)
      data.push_back(curiosity_input(t.next_observation,
                                     t.next_scene ? &*t.next_scene : nullptr,
                                     model_.config.use_image, env_));
    for (int e = 0; e < epochs_; ++e) last_loss_ = rnd_update(model_, data);
  }

  const RndModel& model() const { return model_; }
  double last_loss() const { return last_loss_; }

 private:
  RndModel model_;
  int epochs_;
  EnvConfig env_;
  double last_loss_ = 0.0;
};

}  // namespace qac

#endif  // QAC_BASELINE_CURIOSITY_HPP_

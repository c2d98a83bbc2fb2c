#ifndef QAC_MLP_HPP_
#define QAC_MLP_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qac/errors.hpp"
#include "qac/rng.hpp"
#include "qac/tensor.hpp"

namespace qac {

enum class Activation : std::uint8_t { kTanh, kRelu };

struct DenseLayer {
  Tensor weight;  // out x in
  Tensor bias;    // out
};

// Affine + activation per hidden layer, linear output layer.
struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::kTanh;

  std::size_t input_dim() const { return layers.front().weight.cols(); }
  std::size_t output_dim() const { return layers.back().weight.rows(); }

  std::vector<Tensor*> tensors() {
    std::vector<Tensor*> out;
    for (auto& l : layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }
  std::vector<const Tensor*> tensors() const {
    std::vector<const Tensor*> out;
    for (const auto& l : layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }
};

// Gaussian weights with fan-in scaling (gain 1 for tanh, sqrt 2 for relu),
// zero biases. `output_gain` rescales the last layer.
inline MlpParams make_mlp(const std::vector<std::size_t>& sizes,
                          Activation activation, Rng& rng,
                          double output_gain = 1.0) {
  if (sizes.size() < 2) throw ContractError("an MLP needs at least 2 sizes");
  MlpParams p;
  p.activation = activation;
  const double gain = activation == Activation::kRelu ? std::sqrt(2.0) : 1.0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    DenseLayer layer{Tensor::matrix(sizes[i + 1], sizes[i]),
                     Tensor({sizes[i + 1]})};
    const bool last = i + 2 == sizes.size();
    const double scale =
        (last ? output_gain : gain) / std::sqrt(static_cast<double>(sizes[i]));
    for (double& w : layer.weight.data()) w = scale * rng.normal();
    p.layers.push_back(std::move(layer));
  }
  return p;
}

// Activations recorded by a forward pass. activations[0] is the input batch,
// activations[i + 1] the output of layer i.
struct MlpTrace {
  const MlpParams* params = nullptr;
  std::vector<Tensor> activations;
  bool consumed = false;

  const Tensor& output() const { return activations.back(); }
};

struct MlpGradients {
  std::vector<DenseLayer> layers;
  Tensor input;  // d loss / d input, same shape as the input batch

  std::vector<Tensor*> tensors() {
    std::vector<Tensor*> out;
    for (auto& l : layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }
};

namespace detail {

inline void affine(const Tensor& x, const DenseLayer& layer, Tensor& y) {
  const std::size_t batch = x.rows();
  const std::size_t in = layer.weight.cols();
  const std::size_t out = layer.weight.rows();
  const double* xd = x.data().data();
  const double* wd = layer.weight.data().data();
  const double* bd = layer.bias.data().data();
  double* yd = y.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = xd + b * in;
    double* yr = yd + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = wd + o * in;
      double acc = bd[o];
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      yr[o] = acc;
    }
  }
}

inline void activate(Tensor& y, Activation a) {
  if (a == Activation::kTanh) {
    for (double& v : y.data()) v = std::tanh(v);
  } else {
    for (double& v : y.data()) v = std::max(0.0, v);
  }
}

}  // namespace detail

inline MlpTrace mlp_forward(const MlpParams& params, const Tensor& input) {
  if (params.layers.empty()) throw ContractError("empty MLP");
  if (input.cols() != params.input_dim())
    throw ContractError("MLP input width " + std::to_string(input.cols()) +
                        " != " + std::to_string(params.input_dim()));
  MlpTrace trace;
  trace.params = &params;
  trace.activations.reserve(params.layers.size() + 1);
  trace.activations.push_back(input.rank() == 2
                                  ? input
                                  : Tensor({1, input.cols()},
                                           std::vector<double>(
                                               input.data().begin(),
                                               input.data().end())));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Tensor& x = trace.activations.back();
    Tensor y = Tensor::matrix(x.rows(), params.layers[l].weight.rows());
    detail::affine(x, params.layers[l], y);
    if (l + 1 < params.layers.size()) detail::activate(y, params.activation);
    trace.activations.push_back(std::move(y));
  }
  return trace;
}

// Single-sample forward with no trace kept.
inline std::vector<double> mlp_predict(const MlpParams& params,
                                       std::span<const double> input) {
  if (input.size() != params.input_dim())
    throw ContractError("MLP input width mismatch");
  Tensor x = Tensor({1, input.size()},
                    std::vector<double>(input.begin(), input.end()));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Tensor y = Tensor::matrix(1, params.layers[l].weight.rows());
    detail::affine(x, params.layers[l], y);
    if (l + 1 < params.layers.size()) detail::activate(y, params.activation);
    x = std::move(y);
  }
  return {x.data().begin(), x.data().end()};
}

// Reverse pass for a scalar loss given d loss / d output. A trace can be
// consumed once.
inline MlpGradients backward(MlpTrace& trace, const Tensor& output_grad) {
  if (trace.params == nullptr || trace.activations.empty())
    throw ContractError("backward needs a forward trace");
  if (trace.consumed) throw ContractError("forward trace already consumed");
  trace.consumed = true;
  const MlpParams& params = *trace.params;
  const std::size_t batch = trace.activations.front().rows();
  if (output_grad.size() != batch * params.output_dim())
    throw ContractError("output gradient shape mismatch");

  MlpGradients grads;
  grads.layers.resize(params.layers.size());
  Tensor upstream = Tensor::matrix(batch, params.output_dim());
  std::copy(output_grad.data().begin(), output_grad.data().end(),
            upstream.data().begin());

  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const DenseLayer& layer = params.layers[li];
    const Tensor& x = trace.activations[li];
    const Tensor& y = trace.activations[li + 1];
    const std::size_t in = layer.weight.cols();
    const std::size_t out = layer.weight.rows();

    if (li + 1 < params.layers.size()) {
      double* g = upstream.data().data();
      const double* yd = y.data().data();
      if (params.activation == Activation::kTanh) {
        for (std::size_t k = 0; k < upstream.size(); ++k)
          g[k] *= 1.0 - yd[k] * yd[k];
      } else {
        for (std::size_t k = 0; k < upstream.size(); ++k)
          if (yd[k] <= 0.0) g[k] = 0.0;
      }
    }

    DenseLayer& gl = grads.layers[li];
    gl.weight = Tensor::matrix(out, in);
    gl.bias = Tensor({out});
    Tensor downstream = Tensor::matrix(batch, in);
    const double* gd = upstream.data().data();
    const double* xd = x.data().data();
    const double* wd = layer.weight.data().data();
    double* gw = gl.weight.data().data();
    double* gb = gl.bias.data().data();
    double* dd = downstream.data().data();
    for (std::size_t b = 0; b < batch; ++b) {
      const double* xr = xd + b * in;
      double* dr = dd + b * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double go = gd[b * out + o];
        if (go == 0.0) continue;
        gb[o] += go;
        double* gwr = gw + o * in;
        const double* wr = wd + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          gwr[i] += go * xr[i];
          dr[i] += go * wr[i];
        }
      }
    }
    upstream = std::move(downstream);
  }
  grads.input = std::move(upstream);
  return grads;
}

}  // namespace qac

#endif  // QAC_MLP_HPP_

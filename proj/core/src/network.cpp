#include "rtl/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rtl {

namespace {

void check_finite(const Tensor& t, const char* what) {
  for (double v : t.data) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite value in ") + what);
  }
}

double activate(double z, ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Linear:
      return z;
    case ActivationKind::Relu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

double activate_grad(double z, ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Linear:
      return 1.0;
    case ActivationKind::Relu:
      return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

std::pair<Tensor, ForwardCache> forward(const ParamSet& params, const BinaryMask& mask, const Tensor& input,
                                        ActivationKind activation) {
  if (params.layers.empty()) throw std::invalid_argument("forward: empty ParamSet");
  if (!mask.congruent_with(params)) throw std::invalid_argument("forward: mask not congruent with params");
  if (input.shape.size() != 2 || input.shape[1] != params.input_dim()) {
    throw std::invalid_argument("forward: layer 0 expects input width " + std::to_string(params.input_dim()) +
                                ", got " + std::to_string(input.shape.size() == 2 ? input.shape[1] : 0));
  }

  const std::size_t batch = input.shape[0];
  const std::size_t layer_count = params.layers.size();

  ForwardCache cache;
  cache.activation = activation;
  cache.batch = batch;
  cache.inputs.reserve(layer_count);
  cache.pre_activations.reserve(layer_count);
  cache.masked_weights.reserve(layer_count);

  Tensor x = input;
  for (std::size_t l = 0; l < layer_count; ++l) {
    const Layer& layer = params.layers[l];
    const std::size_t out = layer.out_dim();
    const std::size_t in = layer.in_dim();
    if (x.shape[1] != in) {
      throw std::invalid_argument("forward: layer " + std::to_string(l) + " expects width " + std::to_string(in) +
                                  ", got " + std::to_string(x.shape[1]));
    }

    Tensor masked = layer.weight;
    const auto& bits = mask.layers[l];
    for (std::size_t i = 0; i < masked.data.size(); ++i) {
      if (!bits[i]) masked.data[i] = 0.0;
    }

    Tensor z = Tensor::matrix(batch, out);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* xin = &x.data[b * in];
      for (std::size_t o = 0; o < out; ++o) {
        const double* wrow = &masked.data[o * in];
        double acc = layer.bias.data[o];
        for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * xin[i];
        z.at(b, o) = acc;
      }
    }

    cache.inputs.push_back(std::move(x));
    cache.masked_weights.push_back(std::move(masked));
    cache.mask_bits.push_back(bits);

    const bool is_output = (l + 1 == layer_count);
    Tensor a = z;
    if (!is_output) {
      for (double& v : a.data) v = activate(v, activation);
    }
    cache.pre_activations.push_back(std::move(z));
    x = std::move(a);
  }

  check_finite(x, "forward output");
  return {std::move(x), std::move(cache)};
}

Gradients backward(const ForwardCache& cache, const Tensor& loss_grad) {
  const std::size_t layer_count = cache.masked_weights.size();
  if (layer_count == 0) throw std::invalid_argument("backward: empty cache");
  const std::size_t out_width = cache.pre_activations.back().shape[1];
  if (loss_grad.shape.size() != 2 || loss_grad.shape[0] != cache.batch || loss_grad.shape[1] != out_width) {
    throw std::invalid_argument("backward: loss_grad shape mismatch");
  }

  Gradients grads;
  grads.layers.resize(layer_count);

  const std::size_t batch = cache.batch;
  Tensor delta = loss_grad;  // dL/dz for the current layer (output layer is linear)

  for (std::size_t l = layer_count; l-- > 0;) {
    const Tensor& x = cache.inputs[l];
    const Tensor& w = cache.masked_weights[l];
    const std::size_t out = w.shape[0];
    const std::size_t in = w.shape[1];

    Tensor dw = Tensor::matrix(out, in);
    Tensor db = Tensor({out});
    for (std::size_t b = 0; b < batch; ++b) {
      const double* xin = &x.data[b * in];
      const double* drow = &delta.data[b * out];
      for (std::size_t o = 0; o < out; ++o) {
        const double d = drow[o];
        db.data[o] += d;
        double* dwrow = &dw.data[o * in];
        for (std::size_t i = 0; i < in; ++i) dwrow[i] += d * xin[i];
      }
    }
    // The loss sees mask * W, so d/dW carries the mask bit: pruned entries
    // come out exactly zero.
    const auto& bits = cache.mask_bits[l];
    for (std::size_t i = 0; i < dw.data.size(); ++i) {
      if (!bits[i]) dw.data[i] = 0.0;
    }
    grads.layers[l].weight = std::move(dw);
    grads.layers[l].bias = std::move(db);

    if (l == 0) break;

    Tensor prev_delta = Tensor::matrix(batch, in);
    const Tensor& prev_z = cache.pre_activations[l - 1];
    for (std::size_t b = 0; b < batch; ++b) {
      const double* drow = &delta.data[b * out];
      double* prow = &prev_delta.data[b * in];
      for (std::size_t o = 0; o < out; ++o) {
        const double d = drow[o];
        if (d == 0.0) continue;
        const double* wrow = &w.data[o * in];
        for (std::size_t i = 0; i < in; ++i) prow[i] += d * wrow[i];
      }
      for (std::size_t i = 0; i < in; ++i) prow[i] *= activate_grad(prev_z.at(b, i), cache.activation);
    }
    delta = std::move(prev_delta);
  }

  return grads;
}

std::pair<double, Tensor> loss_and_grad(const Tensor& output, const Tensor& target, LossKind kind) {
  if (!output.same_shape(target)) throw std::invalid_argument("loss_and_grad: output/target shape mismatch");
  const std::size_t n = output.size();
  if (n == 0) throw std::invalid_argument("loss_and_grad: empty tensors");

  Tensor grad(output.shape);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);

  switch (kind) {
    case LossKind::MeanSquaredError:
      for (std::size_t i = 0; i < n; ++i) {
        const double d = output.data[i] - target.data[i];
        loss += d * d;
        grad.data[i] = 2.0 * d * inv_n;
      }
      loss *= inv_n;
      break;
    case LossKind::BceWithLogits:
      for (std::size_t i = 0; i < n; ++i) {
        const double y = target.data[i];
        if (y < 0.0 || y > 1.0) throw std::invalid_argument("loss_and_grad: BCE target outside [0,1]");
        const double z = output.data[i];
        // max(z,0) - z*y + log(1 + exp(-|z|)), the stable form
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        const double sigma = 1.0 / (1.0 + std::exp(-z));
        grad.data[i] = (sigma - y) * inv_n;
      }
      loss *= inv_n;
      break;
  }
  return {loss, std::move(grad)};
}

}  // namespace rtl

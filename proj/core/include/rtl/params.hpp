#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtl/rng.hpp"
#include "rtl/tensor.hpp"

namespace rtl {

// One fully connected layer: weight is out_dim x in_dim, bias is out_dim.
struct Layer {
  Tensor weight;
  Tensor bias;

  std::size_t out_dim() const { return weight.shape[0]; }
  std::size_t in_dim() const { return weight.shape[1]; }
};

// The dense parameter vector, organized per layer. Only weight matrices are
// prunable; biases stay dense.
struct ParamSet {
  std::vector<Layer> layers;

  std::size_t total_prunable() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size();
    return n;
  }
  std::size_t total_dense() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.bias.size();
    return n;
  }
  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }

  bool congruent_with(const ParamSet& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].weight.shape != other.layers[i].weight.shape) return false;
      if (layers[i].bias.shape != other.layers[i].bias.shape) return false;
    }
    return true;
  }

  void check_chain() const {
    for (std::size_t i = 1; i < layers.size(); ++i) {
      if (layers[i].in_dim() != layers[i - 1].out_dim()) {
        throw std::invalid_argument("ParamSet: layer " + std::to_string(i) + " in_dim " +
                                    std::to_string(layers[i].in_dim()) + " != previous out_dim " +
                                    std::to_string(layers[i - 1].out_dim()));
      }
    }
  }
};

// Gradient accumulator, shape-congruent with a ParamSet.
using Gradients = ParamSet;

inline ParamSet zeros_like(const ParamSet& p) {
  ParamSet z;
  z.layers.reserve(p.layers.size());
  for (const auto& l : p.layers) {
    z.layers.push_back({Tensor(l.weight.shape), Tensor(l.bias.shape)});
  }
  return z;
}

// Fan-in-scaled zero-mean normal initialization (gain sqrt(2), the ReLU
// variant). Biases start at zero.
inline ParamSet init_params(const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("init_params: need at least input and output widths");
  ParamSet p;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i];
    const std::size_t out = widths[i + 1];
    Layer layer{Tensor::matrix(out, in), Tensor({out})};
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& w : layer.weight.data) w = scale * rng.normal();
    p.layers.push_back(std::move(layer));
  }
  p.check_chain();
  return p;
}

}  // namespace rtl

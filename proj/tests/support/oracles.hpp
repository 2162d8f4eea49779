#pragma once

// Independent reference implementations used to check the library. These are
// deliberately written as plain scalar loops, sharing no code with the
// implementation paths they verify.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <tuple>
#include <vector>

#include "rtl/mask.hpp"
#include "rtl/network.hpp"
#include "rtl/params.hpp"

namespace oracles {

// Flat scalar-loop forward pass: hidden ReLU, linear output.
inline std::vector<double> forward_scalar(const rtl::ParamSet& params, const rtl::BinaryMask& mask,
                                          const std::vector<double>& input) {
  std::vector<double> x = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const std::size_t out = layer.out_dim();
    const std::size_t in = layer.in_dim();
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = layer.bias.data[o];
      for (std::size_t i = 0; i < in; ++i) {
        const double w = mask.layers[l][o * in + i] ? layer.weight.data[o * in + i] : 0.0;
        acc += w * x[i];
      }
      y[o] = acc;
    }
    if (l + 1 < params.layers.size()) {
      for (double& v : y) v = v > 0.0 ? v : 0.0;
    }
    x = std::move(y);
  }
  return x;
}

// Central finite differences of an arbitrary scalar function of the params.
inline rtl::Gradients finite_difference(const rtl::ParamSet& params,
                                        const std::function<double(const rtl::ParamSet&)>& loss, double step = 1e-5) {
  rtl::Gradients g = rtl::zeros_like(params);
  rtl::ParamSet work = params;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    for (std::size_t i = 0; i < params.layers[l].weight.data.size(); ++i) {
      const double orig = work.layers[l].weight.data[i];
      work.layers[l].weight.data[i] = orig + step;
      const double plus = loss(work);
      work.layers[l].weight.data[i] = orig - step;
      const double minus = loss(work);
      work.layers[l].weight.data[i] = orig;
      g.layers[l].weight.data[i] = (plus - minus) / (2.0 * step);
    }
    for (std::size_t i = 0; i < params.layers[l].bias.data.size(); ++i) {
      const double orig = work.layers[l].bias.data[i];
      work.layers[l].bias.data[i] = orig + step;
      const double plus = loss(work);
      work.layers[l].bias.data[i] = orig - step;
      const double minus = loss(work);
      work.layers[l].bias.data[i] = orig;
      g.layers[l].bias.data[i] = (plus - minus) / (2.0 * step);
    }
  }
  return g;
}

// Standalone scalar Adam, one parameter.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  std::size_t t = 0;
  double lr, beta1, beta2, eps;

  ScalarAdam(double lr_, double b1, double b2, double e) : lr(lr_), beta1(b1), beta2(b2), eps(e) {}

  double step(double w, double grad) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double mh = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
    const double vh = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

// Full-sort brute-force magnitude pruning: returns the set of (layer, flat)
// indices that should be removed under the (|w|, layer, flat) tie-break.
inline std::set<std::pair<std::size_t, std::size_t>> prune_oracle(const rtl::ParamSet& params,
                                                                  const rtl::BinaryMask& mask, std::size_t amount) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> entries;
  for (std::size_t l = 0; l < mask.layers.size(); ++l) {
    for (std::size_t i = 0; i < mask.layers[l].size(); ++i) {
      if (mask.layers[l][i]) entries.emplace_back(std::abs(params.layers[l].weight.data[i]), l, i);
    }
  }
  std::sort(entries.begin(), entries.end());
  std::set<std::pair<std::size_t, std::size_t>> removed;
  for (std::size_t i = 0; i < amount; ++i) removed.insert({std::get<1>(entries[i]), std::get<2>(entries[i])});
  return removed;
}

// Set-based Jaccard: builds explicit index sets and intersects them.
inline double jaccard_oracle(const rtl::BinaryMask& a, const rtl::BinaryMask& b) {
  std::set<std::pair<std::size_t, std::size_t>> sa, sb;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t i = 0; i < a.layers[l].size(); ++i) {
      if (a.layers[l][i]) sa.insert({l, i});
      if (b.layers[l][i]) sb.insert({l, i});
    }
  }
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& e : sa) inter += sb.count(e);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// Rank-then-Pearson Spearman oracle with averaged tied ranks.
inline double spearman_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  auto rank = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t below = 0, equal = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++below;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = static_cast<double>(below) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return r;
  };
  const auto ra = rank(a);
  const auto rb = rank(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

// Scalar double-loop PSNR.
inline double psnr_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

inline bool rel_close(double got, double expected, double rel_tol, double abs_floor = 1e-8) {
  const double diff = std::abs(got - expected);
  if (diff <= abs_floor) return true;
  return diff <= rel_tol * std::max(std::abs(got), std::abs(expected));
}

}  // namespace oracles

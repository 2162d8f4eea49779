#include "rtl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rtl {

std::vector<double> SimilarityMatrix::upper_triangle() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = i + 1; j < size; ++j) out.push_back(at(i, j));
  }
  return out;
}

void CollapseCurve::validate() const {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].sparsity <= points[i - 1].sparsity) {
      throw std::invalid_argument("CollapseCurve: sparsity must be strictly increasing");
    }
  }
}

CollapseCurve::JaccardSeries CollapseCurve::jaccard_series() const {
  JaccardSeries s;
  for (const auto& p : points) {
    s.sparsity.push_back(p.sparsity);
    double sum = 0.0;
    for (double j : p.mean_jaccard) sum += j;
    s.mean_jaccard.push_back(p.mean_jaccard.empty() ? 0.0 : sum / static_cast<double>(p.mean_jaccard.size()));
  }
  return s;
}

void SemanticMatrix::validate() const {
  if (values.size() != size * size) throw std::invalid_argument("SemanticMatrix: size mismatch");
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double v = at(i, j);
      if (v < 0.0 || v > 1.0) throw std::invalid_argument("SemanticMatrix: value outside [0,1]");
      if (std::abs(v - at(j, i)) > 1e-12) throw std::invalid_argument("SemanticMatrix: not symmetric");
    }
  }
}

double jaccard(const BinaryMask& a, const BinaryMask& b) {
  if (!a.congruent_with(b)) throw std::invalid_argument("jaccard: shape mismatch");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto& la = a.layers[l];
    const auto& lb = b.layers[l];
    for (std::size_t i = 0; i < la.size(); ++i) {
      inter += la[i] & lb[i];
      uni += la[i] | lb[i];
    }
  }
  if (uni == 0) return 1.0;  // both empty: identical
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

double jaccard_layer(const BinaryMask& a, const BinaryMask& b, std::size_t layer) {
  const auto& la = a.layers[layer];
  const auto& lb = b.layers[layer];
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < la.size(); ++i) {
    inter += la[i] & lb[i];
    uni += la[i] | lb[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

SimilarityMatrix similarity_matrix(const MaskSet& masks, SimilarityScope scope) {
  const std::size_t k = masks.subnet_count();
  if (k == 0) throw std::invalid_argument("similarity_matrix: empty MaskSet");
  if (scope.layer && *scope.layer >= masks.masks.front().layers.size()) {
    throw std::invalid_argument("similarity_matrix: layer index out of range");
  }

  SimilarityMatrix m;
  m.size = k;
  m.scope = scope;
  m.values.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      const double v = scope.layer ? jaccard_layer(masks.masks[i], masks.masks[j], *scope.layer)
                                   : jaccard(masks.masks[i], masks.masks[j]);
      m.at(i, j) = v;
      m.at(j, i) = v;
    }
  }
  return m;
}

std::optional<double> detect_collapse(const CollapseCurve::JaccardSeries& series, double tau, CollapseMode mode) {
  if (series.sparsity.size() < 3) throw std::invalid_argument("detect_collapse: need at least 3 curve points");
  if (mode == CollapseMode::SimilaritySpike) {
    for (std::size_t i = 1; i < series.mean_jaccard.size(); ++i) {
      if (series.mean_jaccard[i] - series.mean_jaccard[i - 1] > tau) return series.sparsity[i];
    }
  } else {
    for (std::size_t i = 0; i < series.mean_jaccard.size(); ++i) {
      if (series.mean_jaccard[i] < tau) return series.sparsity[i];
    }
  }
  return std::nullopt;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman: need at least 2 values");

  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());

  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= n;
  mean_b /= n;

  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = ra[i] - mean_a;
    const double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) return std::nullopt;  // constant input
  return cov / std::sqrt(var_a * var_b);
}

std::optional<double> semantic_alignment(const MaskSet& masks, const SemanticMatrix& semantic, SimilarityScope scope) {
  const std::size_t k = masks.subnet_count();
  if (k < 3) throw std::invalid_argument("semantic_alignment: need K >= 3");
  if (semantic.size != k) throw std::invalid_argument("semantic_alignment: matrix size mismatch");

  const SimilarityMatrix sim = similarity_matrix(masks, scope);
  std::vector<double> structural = sim.upper_triangle();
  std::vector<double> sem;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) sem.push_back(semantic.at(i, j));
  }
  return spearman(structural, sem);
}

}  // namespace rtl

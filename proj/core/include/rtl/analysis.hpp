#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rtl/mask.hpp"

namespace rtl {

// Global scope or a single layer of the masks.
struct SimilarityScope {
  std::optional<std::size_t> layer;  // nullopt = global

  static SimilarityScope global() { return {}; }
  static SimilarityScope layer_scope(std::size_t l) { return {l}; }
};

struct SimilarityMatrix {
  std::size_t size = 0;
  std::vector<double> values;  // row-major K x K
  SimilarityScope scope;

  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * size + j]; }

  // Strictly-upper-triangle entries in row-major order.
  std::vector<double> upper_triangle() const;
};

// Per-sparsity diagnostics for one sweep: a task metric (balanced accuracy or
// PSNR) and the mean pairwise Jaccard to the other subnetworks, per subset.
struct CollapsePoint {
  double sparsity;
  std::vector<double> metric;        // per subset
  std::vector<double> mean_jaccard;  // per subset
};

struct CollapseCurve {
  std::vector<CollapsePoint> points;

  void validate() const;
  // The label-free view handed to detect_collapse: sparsities and the mean
  // Jaccard averaged over subsets. Metrics are deliberately not included.
  struct JaccardSeries {
    std::vector<double> sparsity;
    std::vector<double> mean_jaccard;
  };
  JaccardSeries jaccard_series() const;
};

// Externally supplied K x K semantic similarity (e.g. WordNet path
// similarity), consumed from file.
struct SemanticMatrix {
  std::size_t size = 0;
  std::vector<double> values;
  std::vector<std::string> subset_ids;

  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
  void validate() const;
};

// |intersection| / |union| over surviving bits. Two all-zero masks count as
// identical (1.0).
double jaccard(const BinaryMask& a, const BinaryMask& b);

SimilarityMatrix similarity_matrix(const MaskSet& masks, SimilarityScope scope = SimilarityScope::global());

enum class CollapseMode {
  SimilaritySpike,  // flag when the forward difference of mean Jaccard exceeds tau
  SimilarityDrop,   // flag when mean Jaccard falls below tau (the INR signature)
};

// Returns the first flagged sparsity, or nullopt. Operates on the Jaccard
// series only; it never sees labels or accuracy.
std::optional<double> detect_collapse(const CollapseCurve::JaccardSeries& series, double tau,
                                      CollapseMode mode = CollapseMode::SimilaritySpike);

// Spearman's rank correlation with averaged ranks for ties. Returns nullopt
// when either input is constant.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

// Spearman over the strictly-upper-triangle of similarity_matrix(masks,
// scope) against the matching entries of the semantic matrix. Needs K >= 3.
std::optional<double> semantic_alignment(const MaskSet& masks, const SemanticMatrix& semantic,
                                         SimilarityScope scope = SimilarityScope::global());

}  // namespace rtl

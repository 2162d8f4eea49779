#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "rtl/datasets.hpp"
#include "rtl/mask.hpp"
#include "rtl/network.hpp"

namespace rtl {

struct BinaryConfusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  double recall() const;             // true positive rate
  double precision() const;          // 0 when undefined
  double balanced_accuracy() const;  // (TPR + TNR) / 2
};

struct ParamCounts {
  std::vector<std::size_t> per_mask;  // surviving weights per mask
  std::size_t union_count = 0;        // popcount of the bitwise OR
  std::size_t dense = 0;              // unprunable (bias) parameters
};

struct MetricsReport {
  std::vector<std::string> subset_ids;
  std::vector<BinaryConfusion> confusions;
  std::vector<double> balanced_accuracy;
  std::vector<double> precision;
  std::vector<double> recall;
  double macro_balanced_accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  ParamCounts params;
};

// Evaluates each subnetwork as a one-vs-rest binary detector over the full
// test set: subnetwork k is f(x; m_k * theta) read at logit k, positive iff
// the logit is > 0, ground truth "sample's label maps to subset k". No
// calibration is applied to the threshold.
MetricsReport evaluate_routed(const ParamSet& params, const MaskSet& masks, const LabeledDataset& test,
                              const std::map<int, int>& label_to_subset);

// Variant for the multi-model baseline: one ParamSet per subnetwork.
MetricsReport evaluate_routed_multi(const std::vector<ParamSet>& per_subnet_params, const MaskSet& masks,
                                    const LabeledDataset& test, const std::map<int, int>& label_to_subset);

// Surviving-weight counts per mask plus the union footprint over the shared
// backbone. Dense (bias) parameters are reported separately.
ParamCounts count_params(const MaskSet& masks, std::size_t dense_params = 0);

}  // namespace rtl

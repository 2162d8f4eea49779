#include "rtl/evaluation.hpp"

#include <stdexcept>

namespace rtl {

double BinaryConfusion::recall() const {
  const std::size_t pos = tp + fn;
  return pos == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pos);
}

double BinaryConfusion::precision() const {
  const std::size_t pred_pos = tp + fp;
  return pred_pos == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred_pos);
}

double BinaryConfusion::balanced_accuracy() const {
  const std::size_t neg = tn + fp;
  const double tnr = neg == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(neg);
  return 0.5 * (recall() + tnr);
}

namespace {

MetricsReport assemble(const std::vector<BinaryConfusion>& confusions, const MaskSet& masks, std::size_t dense) {
  MetricsReport report;
  report.subset_ids = masks.subset_ids;
  report.confusions = confusions;
  for (const auto& c : confusions) {
    report.balanced_accuracy.push_back(c.balanced_accuracy());
    report.precision.push_back(c.precision());
    report.recall.push_back(c.recall());
  }
  const double k = static_cast<double>(confusions.size());
  for (std::size_t i = 0; i < confusions.size(); ++i) {
    report.macro_balanced_accuracy += report.balanced_accuracy[i] / k;
    report.macro_precision += report.precision[i] / k;
    report.macro_recall += report.recall[i] / k;
  }
  report.params = count_params(masks, dense);
  return report;
}

Tensor features_tensor(const LabeledDataset& test) {
  const std::size_t n = test.size();
  const std::size_t dim = test.feature_dim();
  Tensor x = Tensor::matrix(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) x.at(i, j) = test.features[i][j];
  }
  return x;
}

std::vector<int> subset_of_sample(const LabeledDataset& test, const std::map<int, int>& mapping) {
  std::vector<int> out(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto it = mapping.find(test.labels[i]);
    if (it == mapping.end()) {
      throw std::invalid_argument("evaluate_routed: unmapped label " + std::to_string(test.labels[i]));
    }
    out[i] = it->second;
  }
  return out;
}

BinaryConfusion tally(const Tensor& logits, std::size_t component, const std::vector<int>& subset_of, int k) {
  BinaryConfusion c;
  for (std::size_t i = 0; i < logits.shape[0]; ++i) {
    const bool predicted = logits.at(i, component) > 0.0;
    const bool actual = subset_of[i] == k;
    if (predicted && actual) ++c.tp;
    else if (predicted && !actual) ++c.fp;
    else if (!predicted && actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

}  // namespace

MetricsReport evaluate_routed(const ParamSet& params, const MaskSet& masks, const LabeledDataset& test,
                              const std::map<int, int>& label_to_subset) {
  if (test.size() == 0) throw std::invalid_argument("evaluate_routed: empty test set");
  const Tensor x = features_tensor(test);
  const auto subset_of = subset_of_sample(test, label_to_subset);

  std::vector<BinaryConfusion> confusions;
  for (std::size_t k = 0; k < masks.subnet_count(); ++k) {
    auto [logits, cache] = forward(params, masks.masks[k], x);
    (void)cache;
    confusions.push_back(tally(logits, k, subset_of, static_cast<int>(k)));
  }
  return assemble(confusions, masks, params.total_dense());
}

MetricsReport evaluate_routed_multi(const std::vector<ParamSet>& per_subnet_params, const MaskSet& masks,
                                    const LabeledDataset& test, const std::map<int, int>& label_to_subset) {
  if (test.size() == 0) throw std::invalid_argument("evaluate_routed: empty test set");
  if (per_subnet_params.size() != masks.subnet_count()) {
    throw std::invalid_argument("evaluate_routed_multi: params/mask count mismatch");
  }
  const Tensor x = features_tensor(test);
  const auto subset_of = subset_of_sample(test, label_to_subset);

  std::size_t dense = 0;
  std::vector<BinaryConfusion> confusions;
  for (std::size_t k = 0; k < masks.subnet_count(); ++k) {
    auto [logits, cache] = forward(per_subnet_params[k], masks.masks[k], x);
    (void)cache;
    confusions.push_back(tally(logits, k, subset_of, static_cast<int>(k)));
    dense += per_subnet_params[k].total_dense();
  }
  return assemble(confusions, masks, dense);
}

ParamCounts count_params(const MaskSet& masks, std::size_t dense_params) {
  ParamCounts counts;
  counts.dense = dense_params;
  if (masks.masks.empty()) return counts;

  for (const auto& m : masks.masks) counts.per_mask.push_back(m.surviving());

  const auto& first = masks.masks.front();
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    for (std::size_t i = 0; i < first.layers[l].size(); ++i) {
      std::uint8_t bit = 0;
      for (const auto& m : masks.masks) bit |= m.layers[l][i];
      counts.union_count += bit;
    }
  }
  return counts;
}

}  // namespace rtl

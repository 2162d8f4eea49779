#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtl/datasets.hpp"
#include "rtl/mask.hpp"
#include "rtl/training.hpp"

namespace rtl {

// Per-subset batch index lists, all padded to the same length M by cyclic
// repetition, so every subnetwork gets the same number of updates per epoch.
struct BalancedBatchPlan {
  std::vector<std::vector<std::vector<std::size_t>>> batches;  // [subnet][batch] -> sample indices

  std::size_t subnet_count() const { return batches.size(); }
  std::size_t batches_per_epoch() const { return batches.empty() ? 0 : batches.front().size(); }
};

struct RetrainConfig {
  std::size_t epochs = 1;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
};

struct EpochLossRow {
  std::size_t epoch;
  std::string subset_id;
  double mean_loss;
};

struct RetrainResult {
  std::vector<EpochLossRow> trace;
  std::size_t updates_per_subnet = 0;
};

// Splits a seeded shuffle of each subset into batch_size chunks, then repeats
// shorter subsets' batches cyclically until all lists have equal length.
BalancedBatchPlan balance_batches(const Partition& partition, std::size_t batch_size, std::uint64_t seed);

// Interleaved joint retraining over the shared parameter tensor: for each
// epoch, for each batch index, for each subnetwork, one masked Adam update.
// Each subnetwork keeps its own optimizer state; masks never change.
RetrainResult joint_retrain(ParamSet& params, const MaskSet& masks, const BalancedBatchPlan& plan,
                            const BatchBuilder& builder, const RetrainConfig& cfg);

}  // namespace rtl

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rtl/datasets.hpp"
#include "rtl/mask.hpp"
#include "rtl/training.hpp"

namespace rtl {

struct ExtractionConfig {
  std::size_t subset_count = 1;
  std::size_t steps_per_round = 100;  // optimizer steps T per pruning round
  PruneSchedule schedule;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  // Sorted sparsity levels the pruning sequence must land on exactly, so a
  // sweep can snapshot masks at those levels via the round observer.
  std::vector<double> checkpoints;
};

struct ExtractionTraceRow {
  std::size_t round;
  std::string subset_id;
  double sparsity;     // after this round's prune
  double train_loss;   // mean loss over the round's T steps
};

struct ExtractionResult {
  MaskSet masks;
  std::vector<ExtractionTraceRow> trace;
  std::size_t total_steps = 0;
};

// Called after each pruning round for one subset, with the freshly pruned
// mask. Lets sweeps snapshot masks at intermediate sparsity levels.
using RoundObserver = std::function<void(std::size_t subnet, std::size_t round, const BinaryMask& mask)>;

// Iterative per-subset ticket extraction with rewinding: for each subset,
// repeat (train T masked steps from the init snapshot, prune the smallest
// surviving magnitudes, rewind weights and optimizer state) until the target
// sparsity is reached. Subsets are processed independently with per-subset
// seeded streams, so mask k depends only on its own batch stream, init, and
// the config.
ExtractionResult extract_tickets(const ParamSet& init, const Partition& partition, const BatchBuilder& builder,
                                 const ExtractionConfig& cfg, const RoundObserver& observer = {});

}  // namespace rtl

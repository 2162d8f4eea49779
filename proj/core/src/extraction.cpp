#include "rtl/extraction.hpp"

#include <cmath>
#include <stdexcept>

namespace rtl {

namespace {

// Endless seeded batch stream over one subset: shuffles the subset's indices
// and deals them out in batch_size chunks, reshuffling at each pass.
class SubsetBatchStream {
 public:
  SubsetBatchStream(const std::vector<std::size_t>& indices, std::size_t batch_size, std::uint64_t seed)
      : indices_(indices), batch_size_(std::min(batch_size, indices.size())), rng_(seed) {
    reshuffle();
  }

  std::vector<std::size_t> next() {
    std::vector<std::size_t> batch;
    batch.reserve(batch_size_);
    for (std::size_t i = 0; i < batch_size_; ++i) {
      if (cursor_ == indices_.size()) reshuffle();
      batch.push_back(indices_[cursor_++]);
    }
    return batch;
  }

 private:
  void reshuffle() {
    rng_.shuffle(indices_);
    cursor_ = 0;
  }

  std::vector<std::size_t> indices_;
  std::size_t batch_size_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

}  // namespace

ExtractionResult extract_tickets(const ParamSet& init, const Partition& partition, const BatchBuilder& builder,
                                 const ExtractionConfig& cfg, const RoundObserver& observer) {
  if (partition.subset_count() != cfg.subset_count) {
    throw std::invalid_argument("extract_tickets: partition has " + std::to_string(partition.subset_count()) +
                                " subsets, config says " + std::to_string(cfg.subset_count));
  }
  if (cfg.subset_count < 1 || cfg.steps_per_round < 1) {
    throw std::invalid_argument("extract_tickets: subset_count and steps_per_round must be >= 1");
  }
  cfg.schedule.validate();
  for (std::size_t k = 0; k < partition.subset_count(); ++k) {
    if (partition.subsets[k].empty()) {
      throw std::invalid_argument("extract_tickets: subset " +
                                  (k < partition.subset_ids.size() ? partition.subset_ids[k] : std::to_string(k)) +
                                  " is empty");
    }
  }

  const std::size_t total = init.total_prunable();
  ExtractionResult result;
  result.masks.subset_ids = partition.subset_ids;
  result.masks.masks.resize(cfg.subset_count);

  for (std::size_t k = 0; k < cfg.subset_count; ++k) {
    BinaryMask mask = BinaryMask::ones_like(init);

    if (cfg.schedule.target_removed(total) == 0) {
      result.masks.masks[k] = std::move(mask);
      continue;
    }

    SubsetBatchStream stream(partition.subsets[k], cfg.batch_size, derive_seed(cfg.seed, 0x57ea3 + 2 * k));
    Rng builder_rng(derive_seed(cfg.seed, 0xb11d + 2 * k));

    std::size_t round = 0;
    while (true) {
      std::size_t amount = cfg.schedule.next_amount(mask.surviving(), total);
      if (amount == 0) break;
      // Never prune past the next requested checkpoint level.
      const std::size_t removed = total - mask.surviving();
      for (double cp : cfg.checkpoints) {
        const auto boundary = static_cast<std::size_t>(std::llround(cp * static_cast<double>(total)));
        if (removed < boundary) {
          amount = std::min(amount, boundary - removed);
          break;
        }
      }

      ParamSet params = init;
      AdamState state = AdamState::fresh(params, cfg.learning_rate);
      double loss_sum = 0.0;
      for (std::size_t t = 0; t < cfg.steps_per_round; ++t) {
        const auto indices = stream.next();
        Batch batch = builder(k, indices, builder_rng);
        loss_sum += train_step(params, mask, batch, state);
        ++result.total_steps;
      }

      mask = magnitude_prune(params, mask, amount);
      ++round;
      result.trace.push_back({round, result.masks.subset_ids.empty() ? std::to_string(k) : result.masks.subset_ids[k],
                              sparsity_of(mask), loss_sum / static_cast<double>(cfg.steps_per_round)});
      if (observer) observer(k, round, mask);
      // theta is rewound implicitly: `params` was a per-round copy of init.
    }

    result.masks.masks[k] = std::move(mask);
  }

  return result;
}

}  // namespace rtl

#include "rtl/retraining.hpp"

#include <stdexcept>

namespace rtl {

BalancedBatchPlan balance_batches(const Partition& partition, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("balance_batches: batch_size must be >= 1");

  BalancedBatchPlan plan;
  plan.batches.resize(partition.subset_count());

  std::size_t longest = 0;
  for (std::size_t k = 0; k < partition.subset_count(); ++k) {
    if (partition.subsets[k].empty()) throw std::invalid_argument("balance_batches: subset " + std::to_string(k) + " is empty");
    std::vector<std::size_t> order = partition.subsets[k];
    Rng rng(derive_seed(seed, 0xba7c4 + k));
    rng.shuffle(order);
    auto& list = plan.batches[k];
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(start + batch_size, order.size());
      list.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    longest = std::max(longest, list.size());
  }

  // Cyclic repetition in original order until every list has length M.
  for (auto& list : plan.batches) {
    const std::size_t natural = list.size();
    for (std::size_t i = natural; i < longest; ++i) list.push_back(list[i % natural]);
  }
  return plan;
}

RetrainResult joint_retrain(ParamSet& params, const MaskSet& masks, const BalancedBatchPlan& plan,
                            const BatchBuilder& builder, const RetrainConfig& cfg) {
  const std::size_t subnet_count = masks.subnet_count();
  if (plan.subnet_count() != subnet_count) {
    throw std::invalid_argument("joint_retrain: plan has " + std::to_string(plan.subnet_count()) +
                                " subnetworks, masks have " + std::to_string(subnet_count));
  }
  for (const auto& m : masks.masks) {
    if (!m.congruent_with(params)) throw std::invalid_argument("joint_retrain: mask not congruent with params");
  }

  RetrainResult result;
  const std::size_t batches_per_epoch = plan.batches_per_epoch();

  std::vector<AdamState> states;
  std::vector<Rng> rngs;
  states.reserve(subnet_count);
  for (std::size_t k = 0; k < subnet_count; ++k) {
    states.push_back(AdamState::fresh(params, cfg.learning_rate));
    rngs.emplace_back(derive_seed(cfg.seed, 0x2e77 + k));
  }

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<double> loss_sums(subnet_count, 0.0);
    for (std::size_t m = 0; m < batches_per_epoch; ++m) {
      for (std::size_t k = 0; k < subnet_count; ++k) {
        Batch batch = builder(k, plan.batches[k][m], rngs[k]);
        loss_sums[k] += train_step(params, masks.masks[k], batch, states[k]);
      }
    }
    for (std::size_t k = 0; k < subnet_count; ++k) {
      const std::string id = k < masks.subset_ids.size() ? masks.subset_ids[k] : std::to_string(k);
      result.trace.push_back({epoch, id, loss_sums[k] / static_cast<double>(batches_per_epoch)});
    }
  }
  result.updates_per_subnet = cfg.epochs * batches_per_epoch;
  return result;
}

}  // namespace rtl

#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "rtl/retraining.hpp"

using namespace rtl;

namespace {

Partition two_subsets(std::size_t n0, std::size_t n1) {
  Partition p;
  p.subsets.resize(2);
  for (std::size_t i = 0; i < n0; ++i) p.subsets[0].push_back(i);
  for (std::size_t i = 0; i < n1; ++i) p.subsets[1].push_back(n0 + i);
  p.subset_ids = {"s0", "s1"};
  return p;
}

// Deterministic regression builder over synthetic features derived from the
// sample index, so tests don't need a real dataset.
BatchBuilder make_index_builder(std::size_t dim, double target_scale = 1.0) {
  return [dim, target_scale](std::size_t /*subnet*/, std::span<const std::size_t> indices, Rng& /*rng*/) {
    Batch b;
    b.inputs = Tensor::matrix(indices.size(), dim);
    b.targets = Tensor::matrix(indices.size(), 1);
    for (std::size_t r = 0; r < indices.size(); ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double v = std::sin(static_cast<double>(indices[r] * (c + 3) + c));
        b.inputs.at(r, c) = v;
        sum += v;
      }
      b.targets.at(r, 0) = target_scale * sum;
    }
    b.loss = LossKind::MeanSquaredError;
    return b;
  };
}

}  // namespace

TEST_CASE("balance_batches: equal subsets need no repetition") {
  BalancedBatchPlan plan = balance_batches(two_subsets(10, 10), 5, 1);
  REQUIRE(plan.subnet_count() == 2);
  CHECK(plan.batches_per_epoch() == 2);
  for (const auto& list : plan.batches) {
    CHECK(list.size() == 2);
    for (const auto& b : list) CHECK(b.size() == 5);
  }
  // each subset's batches cover exactly its own indices
  for (std::size_t k = 0; k < 2; ++k) {
    std::set<std::size_t> seen;
    for (const auto& b : plan.batches[k]) seen.insert(b.begin(), b.end());
    CHECK(seen.size() == 10);
    for (std::size_t i : seen) CHECK((k == 0 ? i < 10 : i >= 10));
  }
}

TEST_CASE("balance_batches: shorter subset repeats its batches cyclically") {
  BalancedBatchPlan plan = balance_batches(two_subsets(10, 4), 2, 7);
  CHECK(plan.batches_per_epoch() == 5);
  CHECK(plan.batches[0].size() == 5);
  REQUIRE(plan.batches[1].size() == 5);
  // subset 1 has 2 natural batches b1,b2 -> b1,b2,b1,b2,b1
  CHECK(plan.batches[1][2] == plan.batches[1][0]);
  CHECK(plan.batches[1][3] == plan.batches[1][1]);
  CHECK(plan.batches[1][4] == plan.batches[1][0]);
  CHECK(plan.batches[1][0] != plan.batches[1][1]);
}

TEST_CASE("balance_batches: K=1 is the subset's own batches") {
  Partition p;
  p.subsets.push_back({0, 1, 2, 3, 4, 5, 6});
  p.subset_ids = {"all"};
  BalancedBatchPlan plan = balance_batches(p, 3, 2);
  REQUIRE(plan.subnet_count() == 1);
  CHECK(plan.batches_per_epoch() == 3);  // 3 + 3 + 1
  CHECK(plan.batches[0][2].size() == 1);
  std::set<std::size_t> seen;
  for (const auto& b : plan.batches[0]) seen.insert(b.begin(), b.end());
  CHECK(seen.size() == 7);
}

TEST_CASE("balance_batches: empty subset throws") {
  Partition p = two_subsets(5, 0);
  CHECK_THROWS_AS(balance_batches(p, 2, 1), std::invalid_argument);
}

TEST_CASE("joint_retrain: zero epochs leaves params unchanged") {
  Rng rng(3);
  ParamSet params = init_params({4, 8, 1}, rng);
  ParamSet before = params;
  MaskSet masks;
  masks.masks = {BinaryMask::ones_like(params), BinaryMask::ones_like(params)};
  masks.subset_ids = {"s0", "s1"};
  BalancedBatchPlan plan = balance_batches(two_subsets(8, 8), 4, 1);
  RetrainConfig cfg;
  cfg.epochs = 0;
  RetrainResult res = joint_retrain(params, masks, plan, make_index_builder(4), cfg);
  CHECK(res.updates_per_subnet == 0);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    CHECK(params.layers[l].weight.data == before.layers[l].weight.data);
    CHECK(params.layers[l].bias.data == before.layers[l].bias.data);
  }
}

TEST_CASE("joint_retrain: K=1 all-ones mask matches plain Adam training bit-exactly") {
  Rng rng(4);
  ParamSet init = init_params({4, 8, 1}, rng);
  BatchBuilder builder = make_index_builder(4);

  Partition p;
  p.subsets.push_back({0, 1, 2, 3, 4, 5, 6, 7});
  p.subset_ids = {"all"};
  BalancedBatchPlan plan = balance_batches(p, 4, 11);

  MaskSet masks;
  masks.masks = {BinaryMask::ones_like(init)};
  masks.subset_ids = {"all"};

  RetrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 1e-3;
  cfg.seed = 11;

  ParamSet joint = init;
  RetrainResult res = joint_retrain(joint, masks, plan, builder, cfg);
  CHECK(res.updates_per_subnet == 5 * plan.batches_per_epoch());

  // plain loop with the same batch order and the same derived builder stream
  ParamSet plain = init;
  AdamState state = AdamState::fresh(plain, cfg.learning_rate);
  Rng builder_rng(derive_seed(cfg.seed, 0x2e77));
  BinaryMask ones = BinaryMask::ones_like(plain);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& idx : plan.batches[0]) {
      Batch batch = builder(0, idx, builder_rng);
      auto [out, cache] = forward(plain, ones, batch.inputs);
      auto [loss, lg] = loss_and_grad(out, batch.targets, batch.loss);
      adam_step(plain, backward(cache, lg), ones, state);
    }
  }
  for (std::size_t l = 0; l < plain.layers.size(); ++l) {
    CHECK(joint.layers[l].weight.data == plain.layers[l].weight.data);
    CHECK(joint.layers[l].bias.data == plain.layers[l].bias.data);
  }
}

TEST_CASE("joint_retrain: fully disjoint masks equal independent training on weights") {
  Rng rng(5);
  ParamSet init = init_params({4, 8, 1}, rng);

  // split every layer's weights into two disjoint halves; leave a few weights
  // outside both masks to check they stay at init
  MaskSet masks;
  masks.masks = {BinaryMask::zeros_like(init), BinaryMask::zeros_like(init)};
  masks.subset_ids = {"s0", "s1"};
  std::size_t counter = 0;
  for (std::size_t l = 0; l < init.layers.size(); ++l) {
    for (std::size_t i = 0; i < masks.masks[0].layers[l].size(); ++i, ++counter) {
      switch (counter % 3) {
        case 0: masks.masks[0].layers[l][i] = 1; break;
        case 1: masks.masks[1].layers[l][i] = 1; break;
        default: break;  // in neither mask
      }
    }
  }

  BatchBuilder builder = make_index_builder(4);
  BalancedBatchPlan plan = balance_batches(two_subsets(8, 8), 4, 21);
  RetrainConfig cfg;
  cfg.epochs = 4;
  cfg.learning_rate = 1e-3;
  cfg.seed = 21;

  ParamSet joint = init;
  joint_retrain(joint, masks, plan, builder, cfg);

  // independent-training oracle: each subnet trained alone on a fresh copy,
  // same batch order and per-subnet streams
  std::vector<ParamSet> solo;
  for (std::size_t k = 0; k < 2; ++k) {
    ParamSet p = init;
    AdamState state = AdamState::fresh(p, cfg.learning_rate);
    Rng builder_rng(derive_seed(cfg.seed, 0x2e77 + k));
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (const auto& idx : plan.batches[k]) {
        Batch batch = builder(k, idx, builder_rng);
        auto [out, cache] = forward(p, masks.masks[k], batch.inputs);
        auto [loss, lg] = loss_and_grad(out, batch.targets, batch.loss);
        adam_step(p, backward(cache, lg), masks.masks[k], state);
      }
    }
    solo.push_back(std::move(p));
  }

  // Disjoint weight updates commute, but biases are shared by design, so the
  // bias trajectories differ between joint and solo runs and couple weakly
  // back into the weight gradients. Weight agreement is therefore tight but
  // not bit-exact; never-masked weights must be exactly at init.
  for (std::size_t l = 0; l < init.layers.size(); ++l) {
    for (std::size_t i = 0; i < masks.masks[0].layers[l].size(); ++i) {
      if (masks.masks[0].layers[l][i]) {
        CHECK(std::abs(joint.layers[l].weight.data[i] - solo[0].layers[l].weight.data[i]) < 1e-3);
      } else if (masks.masks[1].layers[l][i]) {
        CHECK(std::abs(joint.layers[l].weight.data[i] - solo[1].layers[l].weight.data[i]) < 1e-3);
      } else {
        // outside every mask: bit-identical to init
        CHECK(joint.layers[l].weight.data[i] == init.layers[l].weight.data[i]);
      }
    }
  }
}

TEST_CASE("joint_retrain: masks are never mutated") {
  Rng rng(6);
  ParamSet params = init_params({4, 6, 1}, rng);
  MaskSet masks;
  masks.masks = {BinaryMask::ones_like(params), BinaryMask::ones_like(params)};
  masks.masks[0].layers[0][0] = 0;
  masks.masks[1].layers[1][1] = 0;
  masks.subset_ids = {"s0", "s1"};
  MaskSet snapshot = masks;

  BalancedBatchPlan plan = balance_batches(two_subsets(6, 6), 3, 2);
  RetrainConfig cfg;
  cfg.epochs = 3;
  joint_retrain(params, masks, plan, make_index_builder(4), cfg);
  for (std::size_t k = 0; k < 2; ++k) CHECK(masks.masks[k] == snapshot.masks[k]);
}

TEST_CASE("joint_retrain: overlapping weights differ from both single-subnet counterfactuals") {
  Rng rng(7);
  ParamSet init = init_params({4, 8, 1}, rng);
  MaskSet masks;
  masks.masks = {BinaryMask::ones_like(init), BinaryMask::ones_like(init)};
  masks.subset_ids = {"s0", "s1"};

  // the two subsets fit different targets so their updates disagree
  BatchBuilder builder = [](std::size_t subnet, std::span<const std::size_t> indices, Rng& rng) {
    BatchBuilder base = make_index_builder(4, subnet == 0 ? 1.0 : -1.0);
    return base(subnet, indices, rng);
  };

  BalancedBatchPlan plan = balance_batches(two_subsets(8, 8), 4, 31);
  RetrainConfig cfg;
  cfg.epochs = 4;
  cfg.learning_rate = 1e-3;
  cfg.seed = 31;

  ParamSet joint = init;
  joint_retrain(joint, masks, plan, builder, cfg);

  for (std::size_t k = 0; k < 2; ++k) {
    ParamSet p = init;
    AdamState state = AdamState::fresh(p, cfg.learning_rate);
    Rng builder_rng(derive_seed(cfg.seed, 0x2e77 + k));
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (const auto& idx : plan.batches[k]) {
        Batch batch = builder(k, idx, builder_rng);
        auto [out, cache] = forward(p, masks.masks[k], batch.inputs);
        auto [loss, lg] = loss_and_grad(out, batch.targets, batch.loss);
        adam_step(p, backward(cache, lg), masks.masks[k], state);
      }
    }
    // a shared weight must reflect both subsets' updates, not either alone
    CHECK(joint.layers[0].weight.data[0] != p.layers[0].weight.data[0]);
  }
}

TEST_CASE("joint_retrain: update-count fairness with unequal subsets") {
  Rng rng(8);
  ParamSet params = init_params({4, 6, 1}, rng);
  MaskSet masks;
  masks.masks = {BinaryMask::ones_like(params), BinaryMask::ones_like(params)};
  masks.subset_ids = {"s0", "s1"};
  BalancedBatchPlan plan = balance_batches(two_subsets(20, 4), 4, 3);
  CHECK(plan.batches_per_epoch() == 5);
  RetrainConfig cfg;
  cfg.epochs = 3;
  RetrainResult res = joint_retrain(params, masks, plan, make_index_builder(4), cfg);
  CHECK(res.updates_per_subnet == 15);
  // trace has one row per epoch per subnet
  CHECK(res.trace.size() == 6);
}

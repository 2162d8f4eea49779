#include "rtl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include <json.hpp>

namespace rtl {

namespace {

using nlohmann::json;

Partition trivial_partition(std::size_t n) {
  Partition p;
  p.subsets.resize(1);
  p.subsets[0].resize(n);
  for (std::size_t i = 0; i < n; ++i) p.subsets[0][i] = i;
  p.subset_ids = {"all"};
  return p;
}

std::vector<std::size_t> widths_for(const ClassificationTask& task, const PipelineConfig& cfg) {
  std::vector<std::size_t> widths;
  widths.push_back(task.train.feature_dim());
  for (std::size_t w : cfg.hidden_widths) widths.push_back(w);
  widths.push_back(task.subset_count());
  return widths;
}

double mean_offdiagonal(const SimilarityMatrix& sim, std::size_t row) {
  if (sim.size < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < sim.size; ++j) {
    if (j != row) sum += sim.at(row, j);
  }
  return sum / static_cast<double>(sim.size - 1);
}

}  // namespace

ClassificationTask make_synthetic_task(int clusters, std::size_t per_cluster_train, std::size_t per_cluster_test,
                                       std::size_t dim, double spread, std::uint64_t seed) {
  // Train and test must share the cluster centers, so draw one pooled sample
  // per cluster and split it; the generator emits samples cluster-major.
  const LabeledDataset pooled =
      gen_gaussian_clusters(clusters, per_cluster_train + per_cluster_test, dim, spread, derive_seed(seed, 0x7a11));

  ClassificationTask task;
  task.train.class_count = clusters;
  task.test.class_count = clusters;
  for (int k = 0; k < clusters; ++k) {
    const std::size_t base = static_cast<std::size_t>(k) * (per_cluster_train + per_cluster_test);
    for (std::size_t n = 0; n < per_cluster_train; ++n) {
      task.train.features.push_back(pooled.features[base + n]);
      task.train.labels.push_back(k);
    }
    for (std::size_t n = 0; n < per_cluster_test; ++n) {
      task.test.features.push_back(pooled.features[base + per_cluster_train + n]);
      task.test.labels.push_back(k);
    }
  }
  for (int k = 0; k < clusters; ++k) task.mapping[k] = k;
  task.partition = partition_by_label(task.train, task.mapping);
  return task;
}

BatchBuilder make_detector_builder(const LabeledDataset& dataset, const Partition& partition) {
  // Complement index list per subset, for negative sampling.
  auto complements = std::make_shared<std::vector<std::vector<std::size_t>>>();
  complements->resize(partition.subset_count());
  for (std::size_t k = 0; k < partition.subset_count(); ++k) {
    for (std::size_t j = 0; j < partition.subset_count(); ++j) {
      if (j == k) continue;
      auto& c = (*complements)[k];
      c.insert(c.end(), partition.subsets[j].begin(), partition.subsets[j].end());
    }
  }

  const std::size_t dim = dataset.feature_dim();
  return [&dataset, complements, dim](std::size_t subnet, std::span<const std::size_t> indices, Rng& rng) {
    const auto& negatives_pool = (*complements)[subnet];
    const std::size_t pos = indices.size();
    const std::size_t neg = negatives_pool.empty() ? 0 : pos;

    Batch batch;
    batch.loss = LossKind::BceWithLogits;
    batch.component = subnet;
    batch.inputs = Tensor::matrix(pos + neg, dim);
    batch.targets = Tensor::matrix(pos + neg, 1);
    for (std::size_t b = 0; b < pos; ++b) {
      const auto& x = dataset.features[indices[b]];
      for (std::size_t i = 0; i < dim; ++i) batch.inputs.at(b, i) = x[i];
      batch.targets.at(b, 0) = 1.0;
    }
    for (std::size_t b = 0; b < neg; ++b) {
      const auto& x = dataset.features[negatives_pool[rng.uniform_index(negatives_pool.size())]];
      for (std::size_t i = 0; i < dim; ++i) batch.inputs.at(pos + b, i) = x[i];
      batch.targets.at(pos + b, 0) = 0.0;
    }
    return batch;
  };
}

BatchBuilder make_onehot_builder(const LabeledDataset& dataset, std::size_t subnet_count,
                                 const std::map<int, int>& mapping) {
  const std::size_t dim = dataset.feature_dim();
  auto mapping_copy = std::make_shared<std::map<int, int>>(mapping);
  return [&dataset, mapping_copy, subnet_count, dim](std::size_t /*subnet*/, std::span<const std::size_t> indices,
                                                     Rng& /*rng*/) {
    Batch batch;
    batch.loss = LossKind::BceWithLogits;
    batch.inputs = Tensor::matrix(indices.size(), dim);
    batch.targets = Tensor::matrix(indices.size(), subnet_count);
    for (std::size_t b = 0; b < indices.size(); ++b) {
      const auto& x = dataset.features[indices[b]];
      for (std::size_t i = 0; i < dim; ++i) batch.inputs.at(b, i) = x[i];
      batch.targets.at(b, static_cast<std::size_t>(mapping_copy->at(dataset.labels[indices[b]]))) = 1.0;
    }
    return batch;
  };
}

ParamSet make_classification_init(const ClassificationTask& task, const PipelineConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x1417));
  return init_params(widths_for(task, cfg), rng);
}

MethodResult run_rtl(const ClassificationTask& task, const PipelineConfig& cfg, const ParamSet& init) {
  const BatchBuilder builder = make_detector_builder(task.train, task.partition);

  ExtractionConfig ext;
  ext.subset_count = task.subset_count();
  ext.steps_per_round = cfg.steps_per_round;
  ext.schedule = cfg.schedule;
  ext.seed = cfg.seed;
  ext.batch_size = cfg.batch_size;
  ext.learning_rate = cfg.learning_rate;
  ExtractionResult extracted = extract_tickets(init, task.partition, builder, ext);

  ParamSet params = init;
  const BalancedBatchPlan plan = balance_batches(task.partition, cfg.batch_size, derive_seed(cfg.seed, 0x9e7));
  RetrainConfig rt;
  rt.epochs = cfg.retrain_epochs;
  rt.learning_rate = cfg.learning_rate;
  rt.seed = derive_seed(cfg.seed, 0x137);
  RetrainResult retrained = joint_retrain(params, extracted.masks, plan, builder, rt);

  MethodResult result;
  result.method = "rtl";
  result.masks = std::move(extracted.masks);
  result.report = evaluate_routed(params, result.masks, task.test, task.mapping);
  result.params.push_back(std::move(params));
  result.extraction_steps = extracted.total_steps;
  result.retrain_updates = retrained.updates_per_subnet;
  return result;
}

MethodResult run_imp_single(const ClassificationTask& task, const PipelineConfig& cfg, const ParamSet& init) {
  const Partition whole = trivial_partition(task.train.size());
  const BatchBuilder builder = make_onehot_builder(task.train, task.subset_count(), task.mapping);

  // The balanced binary batches of RTL double each subnetwork's sample
  // presentations through negative sampling; the single-model arm doubles its
  // retraining epochs to match. With a single subset there are no negatives
  // and no doubled presentations, so the factor drops to 1 and this arm
  // coincides bit-exactly with the K=1 run. Extraction runs the same T per
  // round for every arm.
  const std::size_t budget_factor = task.subset_count() > 1 ? 2 : 1;
  ExtractionConfig ext;
  ext.subset_count = 1;
  ext.steps_per_round = cfg.steps_per_round;
  ext.schedule = cfg.schedule;
  ext.seed = cfg.seed;
  ext.batch_size = cfg.batch_size;
  ext.learning_rate = cfg.learning_rate;
  ExtractionResult extracted = extract_tickets(init, whole, builder, ext);

  ParamSet params = init;
  const BalancedBatchPlan plan = balance_batches(whole, cfg.batch_size, derive_seed(cfg.seed, 0x9e7));
  RetrainConfig rt;
  rt.epochs = budget_factor * cfg.retrain_epochs;
  rt.learning_rate = cfg.learning_rate;
  rt.seed = derive_seed(cfg.seed, 0x137);
  RetrainResult retrained = joint_retrain(params, extracted.masks, plan, builder, rt);

  // One shared mask routed to every subset at evaluation time.
  MethodResult result;
  result.method = "imp-single";
  result.masks.subset_ids = task.partition.subset_ids;
  for (std::size_t k = 0; k < task.subset_count(); ++k) result.masks.masks.push_back(extracted.masks.masks[0]);
  result.report = evaluate_routed(params, result.masks, task.test, task.mapping);
  // Report the true single-mask footprint, not K copies.
  result.report.params.per_mask.assign(1, extracted.masks.masks[0].surviving());
  result.params.push_back(std::move(params));
  result.extraction_steps = extracted.total_steps;
  result.retrain_updates = retrained.updates_per_subnet;
  return result;
}

MethodResult run_imp_multi(const ClassificationTask& task, const PipelineConfig& cfg, const ParamSet& init) {
  const BatchBuilder full_builder = make_detector_builder(task.train, task.partition);

  MethodResult result;
  result.method = "imp-multi";
  result.masks.subset_ids = task.partition.subset_ids;

  for (std::size_t k = 0; k < task.subset_count(); ++k) {
    // Each model trains detector k alone, with its own parameter tensor.
    Partition own;
    own.subsets = {task.partition.subsets[k]};
    own.subset_ids = {task.partition.subset_ids[k]};
    const BatchBuilder builder = [&full_builder, k](std::size_t /*subnet*/, std::span<const std::size_t> indices,
                                                    Rng& rng) { return full_builder(k, indices, rng); };

    ExtractionConfig ext;
    ext.subset_count = 1;
    ext.steps_per_round = cfg.steps_per_round;
    ext.schedule = cfg.schedule;
    ext.seed = derive_seed(cfg.seed, 0x3a + k);
    ext.batch_size = cfg.batch_size;
    ext.learning_rate = cfg.learning_rate;
    ExtractionResult extracted = extract_tickets(init, own, builder, ext);

    ParamSet params = init;
    const BalancedBatchPlan plan = balance_batches(own, cfg.batch_size, derive_seed(cfg.seed, 0x9e70 + k));
    RetrainConfig rt;
    rt.epochs = cfg.retrain_epochs;
    rt.learning_rate = cfg.learning_rate;
    rt.seed = derive_seed(cfg.seed, 0x1370 + k);
    MaskSet own_masks;
    own_masks.masks = {extracted.masks.masks[0]};
    own_masks.subset_ids = {task.partition.subset_ids[k]};
    RetrainResult retrained = joint_retrain(params, own_masks, plan, builder, rt);

    result.masks.masks.push_back(std::move(extracted.masks.masks[0]));
    result.params.push_back(std::move(params));
    result.extraction_steps += extracted.total_steps;
    result.retrain_updates += retrained.updates_per_subnet;
  }

  result.report = evaluate_routed_multi(result.params, result.masks, task.test, task.mapping);
  return result;
}

SweepResult run_collapse_sweep(const ClassificationTask& task, const PipelineConfig& cfg,
                               const std::vector<double>& sparsities, double tau) {
  if (sparsities.size() < 3) throw std::invalid_argument("run_collapse_sweep: need at least 3 sparsity levels");
  for (std::size_t i = 1; i < sparsities.size(); ++i) {
    if (sparsities[i] <= sparsities[i - 1]) throw std::invalid_argument("run_collapse_sweep: levels must increase");
  }

  const ParamSet init = make_classification_init(task, cfg);
  const BatchBuilder builder = make_detector_builder(task.train, task.partition);
  const std::size_t total = init.total_prunable();
  const std::size_t subnet_count = task.subset_count();
  const std::size_t level_count = sparsities.size();

  ExtractionConfig ext;
  ext.subset_count = subnet_count;
  ext.steps_per_round = cfg.steps_per_round;
  ext.schedule = cfg.schedule;
  ext.schedule.target_sparsity = sparsities.back();
  ext.seed = cfg.seed;
  ext.batch_size = cfg.batch_size;
  ext.learning_rate = cfg.learning_rate;
  ext.checkpoints = sparsities;

  // snapshots[level][subnet]
  std::vector<std::vector<BinaryMask>> snapshots(level_count, std::vector<BinaryMask>(subnet_count));
  std::vector<std::size_t> next_level(subnet_count, 0);
  const RoundObserver observer = [&](std::size_t subnet, std::size_t /*round*/, const BinaryMask& mask) {
    const std::size_t removed = mask.total_bits() - mask.surviving();
    while (next_level[subnet] < level_count) {
      const auto boundary =
          static_cast<std::size_t>(std::llround(sparsities[next_level[subnet]] * static_cast<double>(total)));
      if (removed < boundary) break;
      snapshots[next_level[subnet]][subnet] = mask;
      ++next_level[subnet];
    }
  };

  extract_tickets(init, task.partition, builder, ext, observer);
  for (std::size_t k = 0; k < subnet_count; ++k) {
    if (next_level[k] != level_count) throw std::runtime_error("run_collapse_sweep: missing mask snapshot");
  }

  SweepResult result;
  for (std::size_t lvl = 0; lvl < level_count; ++lvl) {
    MaskSet masks;
    masks.masks = snapshots[lvl];
    masks.subset_ids = task.partition.subset_ids;

    ParamSet params = init;
    const BalancedBatchPlan plan = balance_batches(task.partition, cfg.batch_size, derive_seed(cfg.seed, 0x9e7));
    RetrainConfig rt;
    rt.epochs = cfg.retrain_epochs;
    rt.learning_rate = cfg.learning_rate;
    rt.seed = derive_seed(cfg.seed, 0x137);
    joint_retrain(params, masks, plan, builder, rt);

    const MetricsReport report = evaluate_routed(params, masks, task.test, task.mapping);
    const SimilarityMatrix sim = similarity_matrix(masks);

    CollapsePoint point;
    point.sparsity = sparsity_of(masks.masks[0]);
    for (std::size_t k = 0; k < subnet_count; ++k) {
      point.metric.push_back(report.balanced_accuracy[k]);
      point.mean_jaccard.push_back(mean_offdiagonal(sim, k));
    }
    result.curve.points.push_back(std::move(point));
    result.masks_per_level.push_back(std::move(masks));
  }

  result.curve.validate();
  result.flagged_sparsity = detect_collapse(result.curve.jaccard_series(), tau);
  return result;
}

InrFixture make_inr_fixture(std::size_t width, std::size_t height) {
  InrFixture fx;
  fx.image.width = width;
  fx.image.height = height;
  fx.image.channels = 3;
  fx.image.pixels.resize(width * height * 3);

  fx.regions.width = width;
  fx.regions.height = height;
  fx.regions.region_count = 2;
  fx.regions.labels.resize(width * height);

  // Left half: smooth color gradient. Right half: checkerboard texture.
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const bool right = x >= width / 2;
      fx.regions.labels[y * width + x] = right ? 1 : 0;
      double r, g, b;
      if (!right) {
        r = static_cast<double>(x) / static_cast<double>(width - 1);
        g = static_cast<double>(y) / static_cast<double>(height - 1);
        b = 0.5;
      } else {
        const bool on = ((x + y) % 2) == 0;
        r = on ? 0.9 : 0.1;
        g = on ? 0.1 : 0.8;
        b = on ? 0.2 : 0.7;
      }
      fx.image.at(y, x, 0) = r;
      fx.image.at(y, x, 1) = g;
      fx.image.at(y, x, 2) = b;
    }
  }

  fx.uniform_regions.width = width;
  fx.uniform_regions.height = height;
  fx.uniform_regions.region_count = 1;
  fx.uniform_regions.labels.assign(width * height, 0);
  return fx;
}

InrComparison run_inr_comparison(const InrFixture& fixture, const PruneSchedule& schedule, const InrFitConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x1417));
  const ParamSet init = make_inr_params(cfg.encoder, cfg.hidden_width, fixture.image.channels, rng);

  const InrFitResult rtl = fit_inr_from_init(init, fixture.image, fixture.regions, schedule, cfg);
  const InrFitResult baseline = fit_inr_from_init(init, fixture.image, fixture.uniform_regions, schedule, cfg);

  const Image rec_rtl = reconstruct(rtl.model, rtl.masks, fixture.regions, fixture.image.width, fixture.image.height,
                                    fixture.image.channels);
  const Image rec_base = reconstruct(baseline.model, baseline.masks, fixture.uniform_regions, fixture.image.width,
                                     fixture.image.height, fixture.image.channels);

  InrComparison cmp;
  cmp.psnr_rtl = psnr(rec_rtl, fixture.image);
  cmp.psnr_baseline = psnr(rec_base, fixture.image);

  const SimilarityMatrix sim = similarity_matrix(rtl.masks);
  for (int r = 0; r < fixture.regions.region_count; ++r) {
    double mse = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < fixture.regions.labels.size(); ++i) {
      if (fixture.regions.labels[i] != r) continue;
      for (std::size_t c = 0; c < fixture.image.channels; ++c) {
        const double d = rec_rtl.pixels[i * fixture.image.channels + c] -
                         fixture.image.pixels[i * fixture.image.channels + c];
        mse += d * d;
        ++count;
      }
    }
    mse /= static_cast<double>(count);
    cmp.per_region_psnr_rtl.push_back(mse == 0.0 ? 99.0 : std::min(99.0, 10.0 * std::log10(1.0 / mse)));
    cmp.per_region_mask_similarity.push_back(mean_offdiagonal(sim, static_cast<std::size_t>(r)));
  }
  return cmp;
}

void BenchmarkSpec::validate() const {
  if (seeds.size() < 3) throw std::invalid_argument("BenchmarkSpec: need at least 3 seeds");
  if (sparsities.empty()) throw std::invalid_argument("BenchmarkSpec: empty sparsity sweep");
  for (std::size_t i = 1; i < sparsities.size(); ++i) {
    if (sparsities[i] <= sparsities[i - 1]) throw std::invalid_argument("BenchmarkSpec: sweep must increase");
  }
}

bool BenchmarkReport::all_passed() const {
  for (const auto& v : verdicts) {
    if (!v.passed) return false;
  }
  return true;
}

BenchmarkReport run_benchmark(const BenchmarkSpec& spec, const PipelineConfig& cfg) {
  spec.validate();

  BenchmarkReport report;
  json doc;
  std::string csv;

  if (spec.task == BenchmarkSpec::Task::SyntheticClassification) {
    csv = "task,seed,sparsity,method,balanced_accuracy,precision,recall,params\n";
    for (double sparsity : spec.sparsities) {
      double rtl_acc_sum = 0.0, single_acc_sum = 0.0;
      bool union_ok = true;
      bool budget_ok = true;
      for (std::uint64_t seed : spec.seeds) {
        ClassificationTask task = make_synthetic_task(4, 200, 100, 8, 1.0, seed);
        PipelineConfig run_cfg = cfg;
        run_cfg.seed = seed;
        run_cfg.schedule.target_sparsity = sparsity;
        const ParamSet init = make_classification_init(task, run_cfg);

        const MethodResult rtl = run_rtl(task, run_cfg, init);
        const MethodResult single = run_imp_single(task, run_cfg, init);
        const MethodResult multi = run_imp_multi(task, run_cfg, init);

        for (const MethodResult* m : {&rtl, &single, &multi}) {
          std::size_t params = m->report.params.union_count + m->report.params.dense;
          if (m->method == "imp-multi") {
            params = 0;
            for (std::size_t i = 0; i < m->report.params.per_mask.size(); ++i) params += m->report.params.per_mask[i];
            params += m->report.params.dense;
          }
          csv += "synthetic," + std::to_string(seed) + "," + std::to_string(sparsity) + "," + m->method + "," +
                 std::to_string(m->report.macro_balanced_accuracy) + "," + std::to_string(m->report.macro_precision) +
                 "," + std::to_string(m->report.macro_recall) + "," + std::to_string(params) + "\n";
        }

        rtl_acc_sum += rtl.report.macro_balanced_accuracy;
        single_acc_sum += single.report.macro_balanced_accuracy;

        std::size_t multi_total = multi.report.params.dense;
        for (std::size_t c : multi.report.params.per_mask) multi_total += c;
        const std::size_t rtl_union = rtl.report.params.union_count + rtl.report.params.dense;
        if (static_cast<double>(rtl_union) > spec.union_ratio * static_cast<double>(multi_total)) union_ok = false;

        const std::size_t k = task.subset_count();
        if (single.extraction_steps * k != rtl.extraction_steps) budget_ok = false;
        if (multi.extraction_steps != rtl.extraction_steps) budget_ok = false;
      }
      const double n = static_cast<double>(spec.seeds.size());
      const double gap = rtl_acc_sum / n - single_acc_sum / n;
      report.verdicts.push_back({"specialization_gap@" + std::to_string(sparsity), gap >= spec.accuracy_margin,
                                 "mean balanced-accuracy gap " + std::to_string(gap) + " (margin " +
                                     std::to_string(spec.accuracy_margin) + ")"});
      report.verdicts.push_back({"union_footprint@" + std::to_string(sparsity), union_ok,
                                 "RTL union <= " + std::to_string(spec.union_ratio) + " x imp-multi total"});
      report.verdicts.push_back({"budget_parity@" + std::to_string(sparsity), budget_ok,
                                 "per-subnetwork step budgets matched under the doubling rule"});
    }
  } else {
    csv = "task,seed,sparsity,psnr_rtl,psnr_baseline\n";
    const InrFixture fixture = make_inr_fixture(16, 16);
    for (double sparsity : spec.sparsities) {
      double rtl_sum = 0.0, base_sum = 0.0;
      for (std::uint64_t seed : spec.seeds) {
        InrFitConfig run_cfg;
        run_cfg.seed = seed;
        PruneSchedule schedule = cfg.schedule;
        schedule.target_sparsity = sparsity;
        const InrComparison cmp = run_inr_comparison(fixture, schedule, run_cfg);
        rtl_sum += cmp.psnr_rtl;
        base_sum += cmp.psnr_baseline;
        csv += "inr," + std::to_string(seed) + "," + std::to_string(sparsity) + "," + std::to_string(cmp.psnr_rtl) +
               "," + std::to_string(cmp.psnr_baseline) + "\n";
      }
      const double n = static_cast<double>(spec.seeds.size());
      const double gap = rtl_sum / n - base_sum / n;
      report.verdicts.push_back({"inr_gap@" + std::to_string(sparsity), gap >= spec.psnr_margin_db,
                                 "mean PSNR gap " + std::to_string(gap) + " dB (margin " +
                                     std::to_string(spec.psnr_margin_db) + ")"});
    }
  }

  json verdicts = json::array();
  for (const auto& v : report.verdicts) {
    verdicts.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  }
  doc["verdicts"] = std::move(verdicts);
  doc["all_passed"] = report.all_passed();
  report.report_json = doc.dump(1);
  report.rows_csv = std::move(csv);
  return report;
}

}  // namespace rtl

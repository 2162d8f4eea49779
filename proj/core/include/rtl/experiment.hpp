#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtl/analysis.hpp"
#include "rtl/datasets.hpp"
#include "rtl/evaluation.hpp"
#include "rtl/extraction.hpp"
#include "rtl/inr.hpp"
#include "rtl/retraining.hpp"

namespace rtl {

// A classification experiment: train/test splits, the subset partition of the
// training data, and the label-to-subset mapping used for routing.
struct ClassificationTask {
  LabeledDataset train;
  LabeledDataset test;
  Partition partition;
  std::map<int, int> mapping;

  std::size_t subset_count() const { return partition.subset_count(); }
};

// Synthetic stand-in for the class-structured image benchmarks: K separated
// Gaussian clusters, identity label-to-subset mapping.
ClassificationTask make_synthetic_task(int clusters, std::size_t per_cluster_train, std::size_t per_cluster_test,
                                       std::size_t dim, double spread, std::uint64_t seed);

// One-vs-rest detector batches for subnetwork k: the given in-subset indices
// as positives plus an equal number of negatives sampled uniformly from the
// other subsets. Targets are batch x 1 against output component k.
BatchBuilder make_detector_builder(const LabeledDataset& dataset, const Partition& partition);

// Whole-dataset batches with one-hot targets over all K logits, the
// single-model training objective.
BatchBuilder make_onehot_builder(const LabeledDataset& dataset, std::size_t subnet_count,
                                 const std::map<int, int>& mapping);

struct PipelineConfig {
  std::vector<std::size_t> hidden_widths = {32, 32};
  std::size_t steps_per_round = 100;  // T
  PruneSchedule schedule;
  std::size_t batch_size = 32;
  std::size_t retrain_epochs = 10;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
};

struct MethodResult {
  std::string method;
  MaskSet masks;                       // K entries (imp-single holds K copies of its one mask)
  std::vector<ParamSet> params;        // one entry, or K for the multi-model baseline
  MetricsReport report;
  std::size_t extraction_steps = 0;    // total optimizer steps in extraction
  std::size_t retrain_updates = 0;     // per-subnetwork updates in retraining
};

// Shared initialization for one seed; all methods start from it.
ParamSet make_classification_init(const ClassificationTask& task, const PipelineConfig& cfg);

// RTL: per-subset ticket extraction, joint retraining over the shared tensor,
// routed evaluation.
MethodResult run_rtl(const ClassificationTask& task, const PipelineConfig& cfg, const ParamSet& init);

// One shared mask extracted and trained on the whole dataset with one-hot
// targets. Gets doubled training steps/epochs to match the balanced binary
// batches' sample presentations.
MethodResult run_imp_single(const ClassificationTask& task, const PipelineConfig& cfg, const ParamSet& init);

// K independently pruned and trained models without weight sharing, all from
// the shared initialization.
MethodResult run_imp_multi(const ClassificationTask& task, const PipelineConfig& cfg, const ParamSet& init);

// Sparsity sweep for collapse diagnostics: extracts once to the deepest
// level, snapshots masks at every level, retrains and evaluates each. Also
// returns detect_collapse's flag at the given threshold.
struct SweepResult {
  CollapseCurve curve;
  std::vector<MaskSet> masks_per_level;
  std::optional<double> flagged_sparsity;
};
SweepResult run_collapse_sweep(const ClassificationTask& task, const PipelineConfig& cfg,
                               const std::vector<double>& sparsities, double tau);

// Deterministic 16x16-style two-region INR fixture: a smooth gradient region
// and a high-frequency textured region.
struct InrFixture {
  Image image;
  RegionMap regions;
  RegionMap uniform_regions;  // single region, for the single-mask baseline
};
InrFixture make_inr_fixture(std::size_t width, std::size_t height);

struct InrComparison {
  double psnr_rtl = 0.0;
  double psnr_baseline = 0.0;
  std::vector<double> per_region_psnr_rtl;
  std::vector<double> per_region_mask_similarity;  // mean Jaccard to other regions
};
// Runs RTL (per-region tickets) and the single-mask IMP baseline from shared
// initial weights and compares reconstruction PSNR.
InrComparison run_inr_comparison(const InrFixture& fixture, const PruneSchedule& schedule, const InrFitConfig& cfg);

// Canned desk-scale experiment suite with statistical aggregation over seeds.
struct BenchmarkSpec {
  enum class Task { SyntheticClassification, InrFixture };
  Task task = Task::SyntheticClassification;
  std::vector<double> sparsities;
  std::vector<std::uint64_t> seeds;
  double accuracy_margin = 0.03;  // RTL over imp-single
  double psnr_margin_db = 0.5;
  double union_ratio = 0.5;       // RTL union vs imp-multi total

  void validate() const;
};

struct BenchmarkVerdict {
  std::string name;
  bool passed;
  std::string detail;
};

struct BenchmarkReport {
  std::vector<BenchmarkVerdict> verdicts;
  std::string rows_csv;       // underlying per-run table
  std::string report_json;

  bool all_passed() const;
};

BenchmarkReport run_benchmark(const BenchmarkSpec& spec, const PipelineConfig& cfg);

}  // namespace rtl

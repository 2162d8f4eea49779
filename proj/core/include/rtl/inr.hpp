#pragma once

#include <cstdint>
#include <vector>

#include "rtl/datasets.hpp"
#include "rtl/extraction.hpp"
#include "rtl/retraining.hpp"

namespace rtl {

// Sinusoidal positional encoding at power-of-two frequencies with the raw
// coordinates appended: [sin(2^j pi x), cos(2^j pi x), sin(2^j pi y),
// cos(2^j pi y)] for j = 0..L-1, then (x, y). Width 34 for L = 8.
struct FourierEncoder {
  std::size_t num_bands = 8;
  bool include_raw = true;

  std::size_t width() const { return 4 * num_bands + (include_raw ? 2 : 0); }
  std::vector<double> encode(double x, double y) const;
};

struct InrModel {
  ParamSet params;
  FourierEncoder encoder;
};

struct InrFitConfig {
  std::size_t hidden_width = 32;  // the paper-shaped five-layer MLP, scaled down
  FourierEncoder encoder;
  std::size_t steps_per_round = 200;  // T inside extraction
  std::size_t retrain_epochs = 40;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
};

struct InrFitResult {
  InrModel model;
  MaskSet masks;
  std::vector<ExtractionTraceRow> extraction_trace;
  std::vector<EpochLossRow> retrain_trace;
  ParamSet init;  // the shared initial weights, for fairness checks
};

// Builds the five-layer coordinate MLP [encoder -> h -> h -> h -> h -> 3].
ParamSet make_inr_params(const FourierEncoder& encoder, std::size_t hidden_width, std::size_t channels, Rng& rng);

// Encoded-coordinate batch builder over a coordinate dataset (MSE on the
// pixel channels; no component selection).
BatchBuilder make_coordinate_builder(const LabeledDataset& coords, const FourierEncoder& encoder);

// Appendix-style per-region INR fitting: per-region ticket extraction on the
// coordinate dataset followed by joint retraining. A uniform region map
// (K = 1) reproduces the single-mask IMP baseline.
InrFitResult fit_inr(const Image& image, const RegionMap& regions, const PruneSchedule& schedule,
                     const InrFitConfig& cfg);

// Same pipeline starting from a caller-provided initialization, so RTL and
// baseline runs can share identical initial weights.
InrFitResult fit_inr_from_init(const ParamSet& init, const Image& image, const RegionMap& regions,
                               const PruneSchedule& schedule, const InrFitConfig& cfg);

// Point-wise evaluation over the pixel grid, routing each pixel through the
// mask of its region. Outputs are clamped to [0,1].
Image reconstruct(const InrModel& model, const MaskSet& masks, const RegionMap& regions, std::size_t width,
                  std::size_t height, std::size_t channels = 3);

// 10 * log10(1 / MSE) over normalized pixels, capped at 99 dB.
double psnr(const Image& a, const Image& b);

}  // namespace rtl

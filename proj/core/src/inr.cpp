#include "rtl/inr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rtl {

std::vector<double> FourierEncoder::encode(double x, double y) const {
  std::vector<double> out;
  out.reserve(width());
  double freq = std::numbers::pi;
  for (std::size_t j = 0; j < num_bands; ++j) {
    out.push_back(std::sin(freq * x));
    out.push_back(std::cos(freq * x));
    out.push_back(std::sin(freq * y));
    out.push_back(std::cos(freq * y));
    freq *= 2.0;
  }
  if (include_raw) {
    out.push_back(x);
    out.push_back(y);
  }
  return out;
}

ParamSet make_inr_params(const FourierEncoder& encoder, std::size_t hidden_width, std::size_t channels, Rng& rng) {
  return init_params({encoder.width(), hidden_width, hidden_width, hidden_width, hidden_width, channels}, rng);
}

BatchBuilder make_coordinate_builder(const LabeledDataset& coords, const FourierEncoder& encoder) {
  const std::size_t in_width = encoder.width();
  const std::size_t out_width = coords.targets.empty() ? 0 : coords.targets.front().size();
  return [&coords, encoder, in_width, out_width](std::size_t /*subnet*/, std::span<const std::size_t> indices,
                                                 Rng& /*rng*/) {
    Batch batch;
    batch.loss = LossKind::MeanSquaredError;
    batch.inputs = Tensor::matrix(indices.size(), in_width);
    batch.targets = Tensor::matrix(indices.size(), out_width);
    for (std::size_t b = 0; b < indices.size(); ++b) {
      const auto& xy = coords.features[indices[b]];
      const auto enc = encoder.encode(xy[0], xy[1]);
      for (std::size_t i = 0; i < in_width; ++i) batch.inputs.at(b, i) = enc[i];
      const auto& target = coords.targets[indices[b]];
      for (std::size_t i = 0; i < out_width; ++i) batch.targets.at(b, i) = target[i];
    }
    return batch;
  };
}

InrFitResult fit_inr_from_init(const ParamSet& init, const Image& image, const RegionMap& regions,
                               const PruneSchedule& schedule, const InrFitConfig& cfg) {
  if (image.width != regions.width || image.height != regions.height) {
    throw std::invalid_argument("fit_inr: image/region dims mismatch");
  }

  const LabeledDataset coords = image_to_coord_dataset(image, regions);
  std::map<int, int> identity;
  for (int r = 0; r < regions.region_count; ++r) identity[r] = r;
  const Partition partition = partition_by_label(coords, identity);

  const BatchBuilder builder = make_coordinate_builder(coords, cfg.encoder);

  ExtractionConfig ext;
  ext.subset_count = partition.subset_count();
  ext.steps_per_round = cfg.steps_per_round;
  ext.schedule = schedule;
  ext.seed = cfg.seed;
  ext.batch_size = cfg.batch_size;
  ext.learning_rate = cfg.learning_rate;

  ExtractionResult extracted = extract_tickets(init, partition, builder, ext);

  // Retraining restarts from the rewound initialization.
  ParamSet params = init;
  const BalancedBatchPlan plan = balance_batches(partition, cfg.batch_size, derive_seed(cfg.seed, 0x9e7));
  RetrainConfig rt;
  rt.epochs = cfg.retrain_epochs;
  rt.learning_rate = cfg.learning_rate;
  rt.seed = derive_seed(cfg.seed, 0x137);
  RetrainResult retrained = joint_retrain(params, extracted.masks, plan, builder, rt);

  InrFitResult result;
  result.model = {std::move(params), cfg.encoder};
  result.masks = std::move(extracted.masks);
  result.extraction_trace = std::move(extracted.trace);
  result.retrain_trace = std::move(retrained.trace);
  result.init = init;
  return result;
}

InrFitResult fit_inr(const Image& image, const RegionMap& regions, const PruneSchedule& schedule,
                     const InrFitConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x1417));
  const ParamSet init = make_inr_params(cfg.encoder, cfg.hidden_width, image.channels, rng);
  return fit_inr_from_init(init, image, regions, schedule, cfg);
}

Image reconstruct(const InrModel& model, const MaskSet& masks, const RegionMap& regions, std::size_t width,
                  std::size_t height, std::size_t channels) {
  if (regions.width != width || regions.height != height) {
    throw std::invalid_argument("reconstruct: region map dims mismatch");
  }
  if (static_cast<std::size_t>(regions.region_count) > masks.subnet_count()) {
    throw std::invalid_argument("reconstruct: region id without a mask");
  }

  auto norm = [](std::size_t i, std::size_t n) {
    return n > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
  };

  Image out;
  out.width = width;
  out.height = height;
  out.channels = channels;
  out.pixels.resize(width * height * channels);

  // Group pixels by region so each mask's forward pass runs once.
  for (int r = 0; r < regions.region_count; ++r) {
    std::vector<std::size_t> pix;
    for (std::size_t i = 0; i < regions.labels.size(); ++i) {
      if (regions.labels[i] == r) pix.push_back(i);
    }
    if (pix.empty()) continue;
    Tensor inputs = Tensor::matrix(pix.size(), model.encoder.width());
    for (std::size_t b = 0; b < pix.size(); ++b) {
      const std::size_t y = pix[b] / width;
      const std::size_t x = pix[b] % width;
      const auto enc = model.encoder.encode(norm(x, width), norm(y, height));
      for (std::size_t i = 0; i < enc.size(); ++i) inputs.at(b, i) = enc[i];
    }
    auto [rgb, cache] = forward(model.params, masks.masks[static_cast<std::size_t>(r)], inputs);
    (void)cache;
    for (std::size_t b = 0; b < pix.size(); ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        out.pixels[pix[b] * channels + c] = std::clamp(rgb.at(b, c), 0.0, 1.0);
      }
    }
  }
  return out;
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw std::invalid_argument("psnr: dimension mismatch");
  }
  double mse = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels.size());
  if (mse == 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

}  // namespace rtl

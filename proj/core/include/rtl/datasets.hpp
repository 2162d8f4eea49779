#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rtl/rng.hpp"
#include "rtl/tensor.hpp"

namespace rtl {

struct LabeledDataset {
  std::vector<std::vector<double>> features;  // all the same width
  std::vector<int> labels;
  int class_count = 0;

  std::size_t size() const { return features.size(); }
  std::size_t feature_dim() const { return features.empty() ? 0 : features.front().size(); }

  // Regression targets, used by the coordinate datasets. Empty for pure
  // classification data.
  std::vector<std::vector<double>> targets;
};

// Disjoint cover of the sample indices by K non-empty subsets.
struct Partition {
  std::vector<std::vector<std::size_t>> subsets;
  std::vector<std::string> subset_ids;

  std::size_t subset_count() const { return subsets.size(); }
  void validate(std::size_t dataset_size) const;
};

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 or 3
  std::vector<double> pixels;  // row-major, values in [0,1]

  double& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }
};

struct RegionMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> labels;  // per-pixel region id in [0, region_count)
  int region_count = 0;

  int at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
};

// K well-separated isotropic Gaussian clusters; centers are seeded random
// directions scaled so the nearest pair is at least 4*spread apart.
LabeledDataset gen_gaussian_clusters(int cluster_count, std::size_t per_cluster_n, std::size_t dim, double spread,
                                     std::uint64_t seed);

// Groups samples into subsets by mapping each label to a subset index. The
// identity mapping gives one subset per class.
Partition partition_by_label(const LabeledDataset& dataset, const std::map<int, int>& label_to_subset);

// Binary portable pixmap (P6) / graymap (P5), 8-bit, maxval 255.
Image load_pixmap(const std::string& path);
void save_pixmap(const Image& image, const std::string& path);

// Reads a P5 graymap whose gray levels are region ids, reassigning regions
// smaller than min_region_pixels to their most frequent 4-neighbor region,
// then compacting ids to 0..region_count-1 in ascending gray order.
RegionMap load_region_map(const std::string& path, std::size_t min_region_pixels = 4);

RegionMap region_map_from_image(const Image& gray, std::size_t min_region_pixels = 4);

// One sample per pixel: feature = corner-anchored normalized coordinates in
// [-1,1]^2, regression target = the pixel's channels, label = region id.
LabeledDataset image_to_coord_dataset(const Image& image, const RegionMap& regions);

}  // namespace rtl

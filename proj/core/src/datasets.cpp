#include "rtl/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

namespace rtl {

void Partition::validate(std::size_t dataset_size) const {
  std::vector<std::uint8_t> seen(dataset_size, 0);
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    if (subsets[k].empty()) {
      throw std::invalid_argument("Partition: subset " + (k < subset_ids.size() ? subset_ids[k] : std::to_string(k)) +
                                  " is empty");
    }
    for (std::size_t idx : subsets[k]) {
      if (idx >= dataset_size) throw std::invalid_argument("Partition: index out of range");
      if (seen[idx]) throw std::invalid_argument("Partition: index appears in two subsets");
      seen[idx] = 1;
    }
  }
  for (std::size_t i = 0; i < dataset_size; ++i) {
    if (!seen[i]) throw std::invalid_argument("Partition: index " + std::to_string(i) + " not covered");
  }
}

LabeledDataset gen_gaussian_clusters(int cluster_count, std::size_t per_cluster_n, std::size_t dim, double spread,
                                     std::uint64_t seed) {
  if (cluster_count < 2) throw std::invalid_argument("gen_gaussian_clusters: need at least 2 clusters");
  if (per_cluster_n < 1) throw std::invalid_argument("gen_gaussian_clusters: per_cluster_n must be >= 1");
  if (dim < 2) throw std::invalid_argument("gen_gaussian_clusters: dim must be >= 2");

  Rng rng(derive_seed(seed, 0xda7a));

  // Seeded unit directions, redrawn until no pair is too close, then scaled
  // so the nearest centers sit at least 4*spread apart.
  std::vector<std::vector<double>> centers;
  constexpr double kMinUnitGap = 0.3;
  for (int attempt = 0; attempt < 10000 && static_cast<int>(centers.size()) < cluster_count; ++attempt) {
    std::vector<double> c(dim);
    double norm = 0.0;
    for (double& v : c) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (double& v : c) v /= norm;
    bool ok = true;
    for (const auto& other : centers) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) d2 += (c[i] - other[i]) * (c[i] - other[i]);
      if (std::sqrt(d2) < kMinUnitGap) {
        ok = false;
        break;
      }
    }
    if (ok) centers.push_back(std::move(c));
  }
  if (static_cast<int>(centers.size()) < cluster_count) {
    throw std::runtime_error("gen_gaussian_clusters: could not place separated centers");
  }

  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < centers.size(); ++a) {
    for (std::size_t b = a + 1; b < centers.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) d2 += (centers[a][i] - centers[b][i]) * (centers[a][i] - centers[b][i]);
      min_gap = std::min(min_gap, std::sqrt(d2));
    }
  }
  // A 3-sigma half-margin between nearest centers (6*spread apart, comfortably
  // past the 4*spread floor) keeps nearest-centroid error under 1%.
  const double radius = spread > 0.0 ? 6.0 * spread / min_gap : 1.0;
  for (auto& c : centers) {
    for (double& v : c) v *= radius;
  }

  LabeledDataset ds;
  ds.class_count = cluster_count;
  ds.features.reserve(static_cast<std::size_t>(cluster_count) * per_cluster_n);
  for (int k = 0; k < cluster_count; ++k) {
    for (std::size_t n = 0; n < per_cluster_n; ++n) {
      std::vector<double> x(dim);
      for (std::size_t i = 0; i < dim; ++i) x[i] = centers[static_cast<std::size_t>(k)][i] + spread * rng.normal();
      ds.features.push_back(std::move(x));
      ds.labels.push_back(k);
    }
  }
  return ds;
}

Partition partition_by_label(const LabeledDataset& dataset, const std::map<int, int>& label_to_subset) {
  int max_subset = -1;
  for (const auto& [label, subset] : label_to_subset) {
    (void)label;
    max_subset = std::max(max_subset, subset);
  }
  if (max_subset < 0) throw std::invalid_argument("partition_by_label: empty mapping");

  Partition p;
  p.subsets.resize(static_cast<std::size_t>(max_subset) + 1);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto it = label_to_subset.find(dataset.labels[i]);
    if (it == label_to_subset.end()) {
      throw std::invalid_argument("partition_by_label: unmapped label " + std::to_string(dataset.labels[i]));
    }
    p.subsets[static_cast<std::size_t>(it->second)].push_back(i);
  }
  for (std::size_t k = 0; k < p.subsets.size(); ++k) {
    if (p.subsets[k].empty()) throw std::invalid_argument("partition_by_label: subset " + std::to_string(k) + " is empty");
    p.subset_ids.push_back(std::to_string(k));
  }
  return p;
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comments, as pixmap
// headers allow.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

std::size_t parse_dim(const std::string& tok, const char* what) {
  if (tok.empty()) throw std::runtime_error(std::string("pixmap: missing ") + what);
  std::size_t v = 0;
  for (char ch : tok) {
    if (ch < '0' || ch > '9') throw std::runtime_error(std::string("pixmap: malformed ") + what);
    v = v * 10 + static_cast<std::size_t>(ch - '0');
    if (v > 1u << 20) throw std::runtime_error(std::string("pixmap: unreasonable ") + what);
  }
  return v;
}

}  // namespace

Image load_pixmap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pixmap: cannot open " + path);

  std::string magic = next_token(in);
  std::size_t channels;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw std::runtime_error("pixmap: unsupported magic '" + magic + "' in " + path);
  }

  const std::size_t width = parse_dim(next_token(in), "width");
  const std::size_t height = parse_dim(next_token(in), "height");
  const std::size_t maxval = parse_dim(next_token(in), "maxval");
  if (width == 0 || height == 0) throw std::runtime_error("pixmap: zero dimension in " + path);
  if (maxval != 255) throw std::runtime_error("pixmap: unsupported maxval " + std::to_string(maxval));

  // Exactly one whitespace byte separates the header from the payload; the
  // token reader has already consumed it.
  const std::size_t count = width * height * channels;
  std::vector<unsigned char> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) throw std::runtime_error("pixmap: truncated payload in " + path);

  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) img.pixels[i] = static_cast<double>(raw[i]) / 255.0;
  return img;
}

void save_pixmap(const Image& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("save_pixmap: channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("pixmap: cannot write " + path);
  out << (image.channels == 1 ? "P5" : "P6") << "\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> raw(image.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("pixmap: write failed for " + path);
}

RegionMap region_map_from_image(const Image& gray, std::size_t min_region_pixels) {
  if (gray.channels != 1) throw std::invalid_argument("region map: expected a single-channel graymap");
  const std::size_t w = gray.width;
  const std::size_t h = gray.height;

  std::vector<int> levels(w * h);
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = static_cast<int>(std::lround(gray.pixels[i] * 255.0));

  // Reassign undersized regions to their most frequent 4-neighbor region.
  for (bool changed = true; changed;) {
    changed = false;
    std::map<int, std::size_t> counts;
    for (int v : levels) counts[v]++;
    for (const auto& [level, count] : counts) {
      if (count >= min_region_pixels || counts.size() == 1) continue;
      std::map<int, std::size_t> neighbor_votes;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          if (levels[y * w + x] != level) continue;
          const std::ptrdiff_t dirs[4][2] = {{0, 1}, {0, -1}, {1, 0}, {-1, 0}};
          for (const auto& d : dirs) {
            const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(y) + d[0];
            const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(x) + d[1];
            if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(h) || nx >= static_cast<std::ptrdiff_t>(w)) continue;
            const int nv = levels[static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx)];
            if (nv != level) neighbor_votes[nv]++;
          }
        }
      }
      if (neighbor_votes.empty()) continue;
      int best = neighbor_votes.begin()->first;
      std::size_t best_votes = neighbor_votes.begin()->second;
      for (const auto& [nv, votes] : neighbor_votes) {
        if (votes > best_votes) {
          best = nv;
          best_votes = votes;
        }
      }
      for (int& v : levels) {
        if (v == level) v = best;
      }
      changed = true;
      break;
    }
  }

  std::set<int> distinct(levels.begin(), levels.end());
  std::map<int, int> compact;
  int next_id = 0;
  for (int v : distinct) compact[v] = next_id++;

  RegionMap rm;
  rm.width = w;
  rm.height = h;
  rm.region_count = next_id;
  rm.labels.resize(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) rm.labels[i] = compact[levels[i]];
  return rm;
}

RegionMap load_region_map(const std::string& path, std::size_t min_region_pixels) {
  return region_map_from_image(load_pixmap(path), min_region_pixels);
}

LabeledDataset image_to_coord_dataset(const Image& image, const RegionMap& regions) {
  if (image.width != regions.width || image.height != regions.height) {
    throw std::invalid_argument("image_to_coord_dataset: image/region dims mismatch");
  }
  LabeledDataset ds;
  ds.class_count = regions.region_count;
  const std::size_t w = image.width;
  const std::size_t h = image.height;
  // Corner-anchored normalization: first pixel maps to -1, last to +1.
  auto norm = [](std::size_t i, std::size_t n) {
    return n > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      ds.features.push_back({norm(x, w), norm(y, h)});
      std::vector<double> rgb(image.channels);
      for (std::size_t c = 0; c < image.channels; ++c) rgb[c] = image.at(y, x, c);
      ds.targets.push_back(std::move(rgb));
      ds.labels.push_back(regions.at(y, x));
    }
  }
  return ds;
}

}  // namespace rtl

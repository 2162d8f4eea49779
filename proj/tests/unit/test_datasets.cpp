#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "rtl/datasets.hpp"

using namespace rtl;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/rtl_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("gen_gaussian_clusters: spread 0 collapses each cluster to its center") {
  LabeledDataset d = gen_gaussian_clusters(3, 5, 4, 0.0, 1);
  CHECK(d.size() == 15);
  CHECK(d.class_count == 3);
  for (int k = 0; k < 3; ++k) {
    const std::vector<double>* center = nullptr;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.labels[i] != k) continue;
      if (!center) {
        center = &d.features[i];
      } else {
        CHECK(d.features[i] == *center);
      }
    }
  }
}

TEST_CASE("gen_gaussian_clusters: per_cluster_n=1 gives exactly K samples") {
  LabeledDataset d = gen_gaussian_clusters(4, 1, 3, 0.5, 2);
  CHECK(d.size() == 4);
}

TEST_CASE("gen_gaussian_clusters: dim < 2 throws") {
  CHECK_THROWS_AS(gen_gaussian_clusters(2, 5, 1, 0.5, 1), std::invalid_argument);
}

TEST_CASE("gen_gaussian_clusters: nearest-centroid oracle classifies >= 99%") {
  LabeledDataset d = gen_gaussian_clusters(2, 500, 2, 1.0, 7);
  // centroids from the labeled data themselves
  std::vector<std::vector<double>> centroid(2, std::vector<double>(2, 0.0));
  std::vector<std::size_t> count(2, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t c = 0; c < 2; ++c) centroid[d.labels[i]][c] += d.features[i][c];
    ++count[d.labels[i]];
  }
  for (int k = 0; k < 2; ++k) {
    for (std::size_t c = 0; c < 2; ++c) centroid[k][c] /= static_cast<double>(count[k]);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double best = 1e300;
    int arg = -1;
    for (int k = 0; k < 2; ++k) {
      double dist = 0.0;
      for (std::size_t c = 0; c < 2; ++c) {
        const double diff = d.features[i][c] - centroid[k][c];
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        arg = k;
      }
    }
    if (arg == d.labels[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(d.size()) >= 0.99);
}

TEST_CASE("partition_by_label: identity mapping gives one subset per class") {
  LabeledDataset d = gen_gaussian_clusters(3, 7, 2, 0.5, 3);
  Partition p = partition_by_label(d, {{0, 0}, {1, 1}, {2, 2}});
  REQUIRE(p.subset_count() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(p.subsets[k].size() == 7);
    for (std::size_t i : p.subsets[k]) CHECK(d.labels[i] == static_cast<int>(k));
  }
  p.validate(d.size());
}

TEST_CASE("partition_by_label: many-to-one mapping merges classes") {
  LabeledDataset d = gen_gaussian_clusters(3, 5, 2, 0.5, 4);
  Partition p = partition_by_label(d, {{0, 0}, {1, 0}, {2, 1}});
  REQUIRE(p.subset_count() == 2);
  CHECK(p.subsets[0].size() == 10);
  CHECK(p.subsets[1].size() == 5);
  p.validate(d.size());
}

TEST_CASE("partition_by_label: unmapped label throws") {
  LabeledDataset d = gen_gaussian_clusters(3, 5, 2, 0.5, 5);
  CHECK_THROWS_AS(partition_by_label(d, {{0, 0}, {1, 1}}), std::invalid_argument);
}

TEST_CASE("Partition::validate: rejects overlap and gaps") {
  Partition p;
  p.subsets = {{0, 1}, {1, 2}};
  p.subset_ids = {"a", "b"};
  CHECK_THROWS_AS(p.validate(3), std::invalid_argument);
  p.subsets = {{0}, {2}};
  CHECK_THROWS_AS(p.validate(3), std::invalid_argument);
  p.subsets = {{0, 1}, {2}};
  p.validate(3);
}

TEST_CASE("pixmap: 1x1 P6 red pixel loads as (1,0,0)") {
  TempFile f("red.ppm");
  write_bytes(f.path, std::string("P6\n1 1\n255\n") + '\xff' + '\x00' + '\x00');
  Image img = load_pixmap(f.path);
  CHECK(img.width == 1);
  CHECK(img.height == 1);
  CHECK(img.channels == 3);
  CHECK(img.at(0, 0, 0) == 1.0);
  CHECK(img.at(0, 0, 1) == 0.0);
  CHECK(img.at(0, 0, 2) == 0.0);
}

TEST_CASE("pixmap: P5 graymap loads as one channel") {
  TempFile f("gray.pgm");
  write_bytes(f.path, std::string("P5\n2 1\n255\n") + '\x00' + '\x80');
  Image img = load_pixmap(f.path);
  CHECK(img.channels == 1);
  CHECK(img.at(0, 0, 0) == 0.0);
  CHECK(img.at(0, 1, 0) == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("pixmap: comments in the header are skipped") {
  TempFile f("comment.pgm");
  write_bytes(f.path, std::string("P5\n# a comment\n1 1\n# another\n255\n") + '\x42');
  Image img = load_pixmap(f.path);
  CHECK(img.at(0, 0, 0) == doctest::Approx(0x42 / 255.0));
}

TEST_CASE("pixmap: save-then-load of a random image stays within 1/255 per channel") {
  Rng rng(17);
  Image img;
  img.width = 8;
  img.height = 8;
  img.channels = 3;
  img.pixels.resize(8 * 8 * 3);
  for (double& v : img.pixels) v = rng.uniform();

  TempFile f("round.ppm");
  save_pixmap(img, f.path);
  Image back = load_pixmap(f.path);
  REQUIRE(back.pixels.size() == img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 1.0 / 255.0);
  }
  // a second save/load round-trip is bit-exact (quantization is idempotent)
  TempFile f2("round2.ppm");
  save_pixmap(back, f2.path);
  Image back2 = load_pixmap(f2.path);
  CHECK(back2.pixels == back.pixels);
}

TEST_CASE("pixmap: malformed inputs are rejected") {
  TempFile f("bad.ppm");

  write_bytes(f.path, "P7\n1 1\n255\n...");
  CHECK_THROWS_AS(load_pixmap(f.path), std::runtime_error);

  write_bytes(f.path, "P6\n1 1\n65535\n......");
  CHECK_THROWS_AS(load_pixmap(f.path), std::runtime_error);

  write_bytes(f.path, std::string("P6\n2 2\n255\n") + "\x01\x02\x03");  // truncated payload
  CHECK_THROWS_AS(load_pixmap(f.path), std::runtime_error);

  write_bytes(f.path, "P6\nx y\n255\n");
  CHECK_THROWS_AS(load_pixmap(f.path), std::runtime_error);

  CHECK_THROWS_AS(load_pixmap("/tmp/rtl_test_does_not_exist.ppm"), std::runtime_error);
}

TEST_CASE("pixmap: header fuzzing never crashes, always throws cleanly") {
  const std::string good = std::string("P5\n2 2\n255\n") + "\x01\x02\x03\x04";
  Rng rng(99);
  int threw = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::string mutated = good;
    const std::size_t pos = rng.uniform_index(mutated.size());
    mutated[pos] = static_cast<char>(rng.next_u64() & 0xff);
    TempFile f("fuzz.pgm");
    write_bytes(f.path, mutated);
    try {
      Image img = load_pixmap(f.path);
      CHECK(img.pixels.size() == img.width * img.height * img.channels);
    } catch (const std::runtime_error&) {
      ++threw;
    }
  }
  CHECK(threw > 0);  // at least some mutations must be rejected
}

TEST_CASE("region map: small regions are reassigned to their dominant neighbor") {
  // 4x4 gray image: one lone pixel of region 9 inside region 0, threshold 4
  Image gray;
  gray.width = 4;
  gray.height = 4;
  gray.channels = 1;
  gray.pixels.assign(16, 0.0);
  gray.pixels[5] = 9.0 / 255.0;
  RegionMap rm = region_map_from_image(gray, 4);
  CHECK(rm.region_count == 1);
  for (int v : rm.labels) CHECK(v == 0);
}

TEST_CASE("region map: ids compact to ascending order") {
  Image gray;
  gray.width = 4;
  gray.height = 2;
  gray.channels = 1;
  // left half gray 200, right half gray 50 -> region 0 = gray 50, region 1 = gray 200
  gray.pixels = {200.0 / 255, 200.0 / 255, 50.0 / 255, 50.0 / 255,
                 200.0 / 255, 200.0 / 255, 50.0 / 255, 50.0 / 255};
  RegionMap rm = region_map_from_image(gray, 1);
  CHECK(rm.region_count == 2);
  CHECK(rm.at(0, 0) == 1);
  CHECK(rm.at(0, 2) == 0);
}

TEST_CASE("image_to_coord_dataset: 2x2 image hits the corners of [-1,1]^2") {
  Image img;
  img.width = 2;
  img.height = 2;
  img.channels = 3;
  img.pixels.assign(12, 0.5);
  RegionMap rm;
  rm.width = 2;
  rm.height = 2;
  rm.labels = {0, 0, 0, 0};
  rm.region_count = 1;

  LabeledDataset d = image_to_coord_dataset(img, rm);
  REQUIRE(d.size() == 4);
  std::set<std::pair<double, double>> coords;
  for (const auto& f : d.features) {
    REQUIRE(f.size() == 2);
    coords.insert({f[0], f[1]});
  }
  CHECK(coords == std::set<std::pair<double, double>>{{-1, -1}, {-1, 1}, {1, -1}, {1, 1}});
  for (const auto& t : d.targets) {
    REQUIRE(t.size() == 3);
    for (double v : t) CHECK(v == 0.5);
  }
}

TEST_CASE("image_to_coord_dataset: coordinates are a bijection with pixels") {
  Image img;
  img.width = 5;
  img.height = 3;
  img.channels = 1;
  img.pixels.assign(15, 0.0);
  RegionMap rm;
  rm.width = 5;
  rm.height = 3;
  rm.labels.assign(15, 0);
  rm.region_count = 1;
  LabeledDataset d = image_to_coord_dataset(img, rm);
  std::set<std::pair<double, double>> coords;
  for (const auto& f : d.features) coords.insert({f[0], f[1]});
  CHECK(coords.size() == 15);
}

TEST_CASE("image_to_coord_dataset: 16x16 two-region fixture yields 2 subsets of 128") {
  Image img;
  img.width = 16;
  img.height = 16;
  img.channels = 3;
  img.pixels.assign(16 * 16 * 3, 0.25);
  RegionMap rm;
  rm.width = 16;
  rm.height = 16;
  rm.region_count = 2;
  rm.labels.resize(256);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) rm.labels[y * 16 + x] = x < 8 ? 0 : 1;
  }
  LabeledDataset d = image_to_coord_dataset(img, rm);
  CHECK(d.size() == 256);
  Partition p = partition_by_label(d, {{0, 0}, {1, 1}});
  CHECK(p.subsets[0].size() == 128);
  CHECK(p.subsets[1].size() == 128);
}

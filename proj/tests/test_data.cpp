#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "lmsx/data.hpp"
#include "lmsx/errors.hpp"

using namespace lmsx;

namespace {

// 2 images of 2x2 pixels, built byte by byte.
std::vector<std::uint8_t> image_fixture() {
  return {
      0x00, 0x00, 0x08, 0x03,  // magic: 3-D u8
      0x00, 0x00, 0x00, 0x02,  // N = 2
      0x00, 0x00, 0x00, 0x02,  // H = 2
      0x00, 0x00, 0x00, 0x02,  // W = 2
      0,    255,  128,  64,    // image 0
      255,  0,    32,   16,    // image 1
  };
}

std::vector<std::uint8_t> label_fixture() {
  return {
      0x00, 0x00, 0x08, 0x01,  // magic: 1-D u8
      0x00, 0x00, 0x00, 0x03,  // N = 3
      7,    0,    9,
  };
}

}  // namespace

TEST_SUITE_BEGIN("data");

TEST_CASE("image fixture parses to the exact expected tensor") {
  const auto content = parse_idx(image_fixture());
  REQUIRE(content.is_images);
  REQUIRE(content.images.shape() == std::vector<std::size_t>{2, 1, 2, 2});
  CHECK(content.images.at(0, 0, 0, 0) == 0.0);
  CHECK(content.images.at(0, 0, 0, 1) == 1.0);
  CHECK(content.images.at(0, 0, 1, 0) == 128.0 / 255.0);
  CHECK(content.images.at(0, 0, 1, 1) == 64.0 / 255.0);
  CHECK(content.images.at(1, 0, 0, 0) == 1.0);
  CHECK(content.images.at(1, 0, 1, 1) == 16.0 / 255.0);
}

TEST_CASE("label fixture parses") {
  const auto content = parse_idx(label_fixture());
  REQUIRE_FALSE(content.is_images);
  CHECK(content.labels == std::vector<int>{7, 0, 9});
}

TEST_CASE("wrong magic is rejected with the offset") {
  auto bytes = image_fixture();
  bytes[3] = 0x02;  // 0x00000802
  CHECK_THROWS_WITH_AS(parse_idx(bytes),
                       doctest::Contains("0x00000802"), BadMagicError);
}

TEST_CASE("declared-vs-actual payload mismatches are rejected") {
  auto bytes = image_fixture();
  bytes.pop_back();  // one pixel short
  CHECK_THROWS_AS(parse_idx(bytes), TruncatedPayloadError);

  auto declared_ten = image_fixture();
  declared_ten[7] = 10;  // N = 10, payload still 2 images
  CHECK_THROWS_AS(parse_idx(declared_ten), TruncatedPayloadError);

  auto trailing = image_fixture();
  trailing.push_back(0);
  CHECK_THROWS_AS(parse_idx(trailing), DimensionMismatchError);

  const std::vector<std::uint8_t> tiny{0x00, 0x00};
  CHECK_THROWS_AS(parse_idx(tiny), TruncatedPayloadError);
}

TEST_CASE("round-trip: parse then write reproduces the original bytes") {
  const auto original = image_fixture();
  const auto content = parse_idx(original);
  CHECK(write_idx_images(content.images) == original);

  const auto labels_original = label_fixture();
  const auto labels = parse_idx(labels_original);
  CHECK(write_idx_labels(labels.labels) == labels_original);
}

TEST_CASE("gzip-compressed IDX files are read transparently") {
  const auto dir = std::filesystem::path(LMSX_SOURCE_DIR) / "data" / "mnist10k";
  const auto paths = MnistPaths::in_dir(dir);
  REQUIRE(std::filesystem::exists(paths.test_images));
  const auto bytes = read_file_maybe_gzip(paths.test_images);
  const auto content = parse_idx(bytes);
  REQUIRE(content.is_images);
  CHECK(content.images.extent(0) == 1000);
  CHECK(content.images.extent(2) == 28);
  CHECK(content.images.extent(3) == 28);
}

TEST_CASE("blobs with zero spread sit exactly on the class centers") {
  const LabeledData data = make_blob_data(3, 4, 2, 0.0, 7);
  REQUIRE(data.size() == 12);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double angle = 2.0 * 3.14159265358979323846 * data.labels[i] / 4.0;
    CHECK(data.features.at(i, 0) == doctest::Approx(kBlobRadius * std::cos(angle)));
    CHECK(data.features.at(i, 1) == doctest::Approx(kBlobRadius * std::sin(angle)));
  }
}

TEST_CASE("blobs are deterministic per seed") {
  const LabeledData a = make_blob_data(50, 3, 4, 0.5, 123);
  const LabeledData b = make_blob_data(50, 3, 4, 0.5, 123);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  const LabeledData c = make_blob_data(50, 3, 4, 0.5, 124);
  CHECK_FALSE(a.features == c.features);
}

TEST_CASE("two tight blobs are separated by the nearest-center rule") {
  const LabeledData data = make_blob_data(500, 2, 2, kBlobRadius / 10.0, 31);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    // centers are (r, 0) and (-r, 0); nearest center = sign of x0
    const int predicted = data.features.at(i, 0) >= 0.0 ? 0 : 1;
    if (predicted == data.labels[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / data.size() >= 0.99);
}

TEST_CASE("split produces the exact 45k/5k/10k sizes") {
  LabeledData data{Tensor({60000, 1}), std::vector<int>(60000, 0)};
  const DatasetSplit split_result = split(data, {0.75, 1.0 / 12.0, 1.0 / 6.0}, 1, 1);
  CHECK(split_result.train.size() == 45000);
  CHECK(split_result.val.size() == 5000);
  CHECK(split_result.test.size() == 10000);
}

TEST_CASE("split is disjoint and exhaustive") {
  constexpr std::size_t kN = 100;
  LabeledData data{Tensor({kN, 1}), std::vector<int>(kN, 0)};
  for (std::size_t i = 0; i < kN; ++i) data.features.at(i, 0) = static_cast<double>(i);
  const DatasetSplit s = split(data, {0.6, 0.25, 0.15}, 9, 1);
  std::multiset<long> seen;
  auto collect = [&](const LabeledData& part) {
    const double mean = s.normalization.feature_mean[0];
    for (std::size_t i = 0; i < part.size(); ++i) {
      seen.insert(std::lround(part.features.at(i, 0) + mean));
    }
  };
  collect(s.train);
  collect(s.val);
  collect(s.test);
  REQUIRE(seen.size() == kN);
  long expect = 0;
  for (long v : seen) CHECK(v == expect++);
}

TEST_CASE("all-train split and empty-split errors") {
  LabeledData data{Tensor({10, 1}), std::vector<int>(10, 0)};
  const DatasetSplit all_train = split(data, {1.0, 0.0, 0.0}, 3, 1);
  CHECK(all_train.train.size() == 10);
  CHECK(all_train.val.size() == 0);
  CHECK(all_train.test.size() == 0);

  CHECK_THROWS_AS(split(data, {0.99, 0.01, 0.0}, 3, 1), EmptySplitError);
  CHECK_THROWS_AS(split(data, {0.5, 0.2, 0.2}, 3, 1), Error);  // doesn't sum to 1
}

TEST_CASE("two seeds permute differently but sizes agree") {
  constexpr std::size_t kN = 50;
  LabeledData data{Tensor({kN, 1}), std::vector<int>(kN, 0)};
  for (std::size_t i = 0; i < kN; ++i) data.features.at(i, 0) = static_cast<double>(i);
  const DatasetSplit a = split(data, {0.5, 0.3, 0.2}, 1, 1);
  const DatasetSplit b = split(data, {0.5, 0.3, 0.2}, 2, 1);
  CHECK(a.train.size() == b.train.size());
  CHECK(a.val.size() == b.val.size());
  CHECK_FALSE(a.train.features == b.train.features);
}

TEST_CASE("train-split mean is zero and is reused for val/test") {
  const DatasetSplit s = make_blobs(100, 3, 2, 1.0, 41, {0.6, 0.2, 0.2});
  const std::size_t d = 2;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < s.train.size(); ++i) mean += s.train.features.at(i, j);
    mean /= static_cast<double>(s.train.size());
    CHECK(std::fabs(mean) <= 1e-9);
  }
  // val split keeps its own (nonzero) mean after subtracting the train mean
  double val_mean = 0.0;
  for (std::size_t i = 0; i < s.val.size(); ++i) val_mean += s.val.features.at(i, 0);
  val_mean /= static_cast<double>(s.val.size());
  CHECK(std::fabs(val_mean) > 0.0);
}

TEST_CASE("mnist fixtures load with subsets and splits") {
  const auto dir = std::filesystem::path(LMSX_SOURCE_DIR) / "data" / "mnist10k";
  const DatasetSplit s = load_mnist(MnistPaths::in_dir(dir), {0.9, 0.1, 0.0}, 3, 2000, 500);
  CHECK(s.train.size() == 1800);
  CHECK(s.val.size() == 200);
  CHECK(s.test.size() == 500);
  CHECK(s.num_classes == 10);
  CHECK(s.normalization.pixels_scaled_to_unit);
  // labels cover all ten digits in a 1800-sample draw
  std::set<int> seen(s.train.labels.begin(), s.train.labels.end());
  CHECK(seen.size() == 10);
  // train mean is zero per pixel
  double mean = 0.0;
  for (std::size_t i = 0; i < s.train.size(); ++i) mean += s.train.features.at(i, 0, 14, 14);
  CHECK(std::fabs(mean / s.train.size()) <= 1e-9);
}

TEST_SUITE_END();

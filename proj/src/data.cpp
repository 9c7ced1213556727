#include "lmsx/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "lmsx/angular.hpp"
#include "lmsx/errors.hpp"

namespace lmsx {
namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) {
    throw TruncatedPayloadError("IDX stream ends at byte " + std::to_string(bytes.size()) +
                                "; needed 4 bytes at offset " + std::to_string(offset));
  }
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  // 16 + MAX_WBITS selects gzip decoding
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    throw IoError("zlib inflateInit failed");
  }
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> buf(1 << 16);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IoError("gzip stream corrupt (zlib code " + std::to_string(rc) + ")");
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

LabeledData take_rows(const LabeledData& data, std::span<const std::size_t> rows) {
  std::vector<std::size_t> shape = data.features.shape();
  shape[0] = rows.size();
  const std::size_t stride = data.features.size() / data.features.extent(0);
  LabeledData out{Tensor(shape), {}};
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* src = data.features.data() + rows[r] * stride;
    std::copy(src, src + stride, out.features.data() + r * stride);
    out.labels.push_back(data.labels[rows[r]]);
  }
  return out;
}

void subtract_mean(LabeledData& data, const std::vector<double>& mean) {
  if (data.size() == 0) return;
  const std::size_t stride = data.features.size() / data.features.extent(0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double* row = data.features.data() + i * stride;
    for (std::size_t j = 0; j < stride; ++j) row[j] -= mean[j];
  }
}

}  // namespace

IdxContent parse_idx(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  IdxContent content;
  if (magic == kImagesMagic) {
    const std::size_t n = read_be32(bytes, 4);
    const std::size_t h = read_be32(bytes, 8);
    const std::size_t w = read_be32(bytes, 12);
    if (h == 0 || w == 0) {
      throw DimensionMismatchError("IDX image dimensions " + std::to_string(h) + "x" +
                                   std::to_string(w) + " invalid (header bytes 8..16)");
    }
    const std::size_t expected = 16 + n * h * w;
    if (bytes.size() < expected) {
      throw TruncatedPayloadError("IDX image payload ends at byte " +
                                  std::to_string(bytes.size()) + ", header declares " +
                                  std::to_string(expected));
    }
    if (bytes.size() > expected) {
      throw DimensionMismatchError("IDX image payload has " +
                                   std::to_string(bytes.size() - expected) +
                                   " trailing bytes past offset " + std::to_string(expected));
    }
    content.is_images = true;
    content.images = Tensor({n, 1, h, w});
    for (std::size_t i = 0; i < n * h * w; ++i) {
      content.images[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    }
  } else if (magic == kLabelsMagic) {
    const std::size_t n = read_be32(bytes, 4);
    const std::size_t expected = 8 + n;
    if (bytes.size() < expected) {
      throw TruncatedPayloadError("IDX label payload ends at byte " +
                                  std::to_string(bytes.size()) + ", header declares " +
                                  std::to_string(expected));
    }
    if (bytes.size() > expected) {
      throw DimensionMismatchError("IDX label payload has " +
                                   std::to_string(bytes.size() - expected) +
                                   " trailing bytes past offset " + std::to_string(expected));
    }
    content.is_images = false;
    content.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) content.labels.push_back(bytes[8 + i]);
  } else {
    char hex[16];
    std::snprintf(hex, sizeof hex, "0x%08x", magic);
    throw BadMagicError(std::string("IDX magic ") + hex +
                        " at byte 0 (expected 0x00000803 or 0x00000801)");
  }
  return content;
}

std::vector<std::uint8_t> write_idx_images(const Tensor& images) {
  if (images.ndim() != 4 || images.extent(1) != 1) {
    throw ShapeMismatchError("IDX writer expects N x 1 x H x W images, got " +
                             shape_to_string(images.shape()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.size());
  write_be32(out, kImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.extent(0)));
  write_be32(out, static_cast<std::uint32_t>(images.extent(2)));
  write_be32(out, static_cast<std::uint32_t>(images.extent(3)));
  for (std::size_t i = 0; i < images.size(); ++i) {
    const double v = images[i] * 255.0;
    out.push_back(static_cast<std::uint8_t>(std::llround(std::clamp(v, 0.0, 255.0))));
  }
  return out;
}

std::vector<std::uint8_t> write_idx_labels(std::span<const int> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  write_be32(out, kLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) out.push_back(static_cast<std::uint8_t>(l));
  return out;
}

std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    return gunzip(bytes);
  }
  return bytes;
}

LabeledData make_blob_data(std::size_t n_per_class, int classes, std::size_t dim,
                           double spread, std::uint64_t seed) {
  if (classes < 2) throw Error("make_blobs needs >= 2 classes");
  if (dim < 2) throw Error("make_blobs needs dim >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  LabeledData data{Tensor({n_per_class * static_cast<std::size_t>(classes), dim}), {}};
  std::size_t row = 0;
  for (int c = 0; c < classes; ++c) {
    const double angle = 2.0 * angular::kPi * static_cast<double>(c) / classes;
    for (std::size_t s = 0; s < n_per_class; ++s, ++row) {
      data.features.at(row, 0) = kBlobRadius * std::cos(angle) + spread * noise(rng);
      data.features.at(row, 1) = kBlobRadius * std::sin(angle) + spread * noise(rng);
      for (std::size_t j = 2; j < dim; ++j) data.features.at(row, j) = spread * noise(rng);
      data.labels.push_back(c);
    }
  }
  return data;
}

DatasetSplit split(const LabeledData& data, const std::array<double, 3>& fractions,
                   std::uint64_t seed, int num_classes) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw Error("split fractions must sum to 1, got " + std::to_string(sum));
  }
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::array<std::size_t, 3> counts{};
  counts[0] = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  counts[1] = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
  counts[0] = std::min(counts[0], n);
  counts[1] = std::min(counts[1], n - counts[0]);
  counts[2] = n - counts[0] - counts[1];
  const char* names[3] = {"train", "val", "test"};
  for (int s = 0; s < 3; ++s) {
    if (fractions[s] > 0.0 && counts[s] == 0) {
      throw EmptySplitError(std::string(names[s]) + " split would be empty (fraction " +
                            std::to_string(fractions[s]) + " of " + std::to_string(n) + ")");
    }
  }

  DatasetSplit out;
  out.num_classes = num_classes;
  std::span<const std::size_t> all(order);
  out.train = take_rows(data, all.subspan(0, counts[0]));
  out.val = take_rows(data, all.subspan(counts[0], counts[1]));
  out.test = take_rows(data, all.subspan(counts[0] + counts[1], counts[2]));

  const std::size_t stride = data.size() ? data.features.size() / data.features.extent(0) : 0;
  out.normalization.feature_mean.assign(stride, 0.0);
  for (std::size_t i = 0; i < out.train.size(); ++i) {
    const double* row = out.train.features.data() + i * stride;
    for (std::size_t j = 0; j < stride; ++j) out.normalization.feature_mean[j] += row[j];
  }
  if (out.train.size() > 0) {
    for (double& v : out.normalization.feature_mean) v /= static_cast<double>(out.train.size());
  }
  subtract_mean(out.train, out.normalization.feature_mean);
  subtract_mean(out.val, out.normalization.feature_mean);
  subtract_mean(out.test, out.normalization.feature_mean);
  return out;
}

DatasetSplit make_blobs(std::size_t n_per_class, int classes, std::size_t dim, double spread,
                        std::uint64_t seed, const std::array<double, 3>& fractions) {
  return split(make_blob_data(n_per_class, classes, dim, spread, seed), fractions, seed,
               classes);
}

MnistPaths MnistPaths::in_dir(const std::filesystem::path& dir) {
  auto pick = [&dir](const char* base) -> std::filesystem::path {
    const auto plain = dir / base;
    const auto gz = dir / (std::string(base) + ".gz");
    if (std::filesystem::exists(plain)) return plain;
    return gz;
  };
  return MnistPaths{pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"),
                    pick("t10k-images-idx3-ubyte"), pick("t10k-labels-idx1-ubyte")};
}

namespace {

LabeledData load_idx_pair(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path) {
  IdxContent images = parse_idx(read_file_maybe_gzip(images_path));
  if (!images.is_images) {
    throw BadMagicError(images_path.string() + " holds labels, expected images");
  }
  IdxContent labels = parse_idx(read_file_maybe_gzip(labels_path));
  if (labels.is_images) {
    throw BadMagicError(labels_path.string() + " holds images, expected labels");
  }
  if (images.images.extent(0) != labels.labels.size()) {
    throw DimensionMismatchError("image count " + std::to_string(images.images.extent(0)) +
                                 " != label count " + std::to_string(labels.labels.size()));
  }
  return LabeledData{std::move(images.images), std::move(labels.labels)};
}

LabeledData seeded_subset(const LabeledData& data, std::size_t subset, std::uint64_t seed) {
  if (subset == 0 || subset >= data.size()) return data;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(subset);
  return take_rows(data, order);
}

}  // namespace

DatasetSplit load_mnist(const MnistPaths& paths, const std::array<double, 3>& train_fractions,
                        std::uint64_t seed, std::size_t subset_train,
                        std::size_t subset_test) {
  LabeledData train_pool = load_idx_pair(paths.train_images, paths.train_labels);
  LabeledData test_pool = load_idx_pair(paths.test_images, paths.test_labels);
  train_pool = seeded_subset(train_pool, subset_train, seed);
  test_pool = seeded_subset(test_pool, subset_test, seed + 1);

  // Fractions split the train pool into train/val/holdout; the test file is
  // the test split.
  DatasetSplit out = split(train_pool, train_fractions, seed, 10);
  out.test = std::move(test_pool);
  subtract_mean(out.test, out.normalization.feature_mean);
  out.normalization.pixels_scaled_to_unit = true;
  return out;
}

}  // namespace lmsx

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lmsx/tensor.hpp"

namespace lmsx {

struct LabeledData {
  Tensor features;          // first axis = sample
  std::vector<int> labels;  // in [0, num_classes)

  std::size_t size() const { return labels.size(); }
};

struct Normalization {
  std::vector<double> feature_mean;  // computed on the training split only
  bool pixels_scaled_to_unit = false;
};

struct DatasetSplit {
  LabeledData train;
  LabeledData val;
  LabeledData test;
  Normalization normalization;
  int num_classes = 0;
};

// --- IDX ---

struct IdxContent {
  bool is_images = false;
  Tensor images;            // N x 1 x H x W, scaled to [0, 1]
  std::vector<int> labels;  // filled for label files
};

// Parses a big-endian IDX byte stream: magic 0x00000803 (3-D u8 images)
// or 0x00000801 (1-D u8 labels). Error messages carry the byte offset.
IdxContent parse_idx(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> write_idx_images(const Tensor& images);
std::vector<std::uint8_t> write_idx_labels(std::span<const int> labels);

/// Reads a whole file; transparently inflates gzip streams (1f 8b magic).
std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path);

// --- synthetic blobs ---

inline constexpr double kBlobRadius = 4.0;

// Class centers at equal angles on a circle of radius kBlobRadius (axes 0/1;
// higher dims zero), isotropic Gaussian noise of the given spread.
LabeledData make_blob_data(std::size_t n_per_class, int classes, std::size_t dim,
                           double spread, std::uint64_t seed);

// --- splitting / normalization ---

// Seeded permutation followed by contiguous slicing; train-set per-feature
// means are subtracted from every split. A nonzero fraction that rounds to
// zero samples raises EmptySplitError.
DatasetSplit split(const LabeledData& data, const std::array<double, 3>& fractions,
                   std::uint64_t seed, int num_classes);

DatasetSplit make_blobs(std::size_t n_per_class, int classes, std::size_t dim, double spread,
                        std::uint64_t seed,
                        const std::array<double, 3>& fractions = {0.8, 0.1, 0.1});

struct MnistPaths {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;

  static MnistPaths in_dir(const std::filesystem::path& dir);
};

// Loads IDX files, optionally keeps only a seeded subset (0 = all), splits
// the train pool by fractions (train/val/holdout) and normalizes with the
// train-split mean.
DatasetSplit load_mnist(const MnistPaths& paths, const std::array<double, 3>& train_fractions,
                        std::uint64_t seed, std::size_t subset_train = 0,
                        std::size_t subset_test = 0);

}  // namespace lmsx

#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "lmsx/network.hpp"
#include "lmsx/optim.hpp"

namespace lmsx {

struct DataConfig {
  std::string source = "blobs";  // "blobs" | "mnist"
  std::filesystem::path dir;     // mnist IDX directory (LMSX_DATA_DIR overrides)
  int classes = 4;               // blobs
  std::size_t dim = 2;           // blobs
  std::size_t n_per_class = 100;  // blobs
  double spread = 0.4;            // blobs
  std::array<double, 3> split = {0.8, 0.1, 0.1};
  std::size_t subset_train = 0;  // mnist; 0 = all
  std::size_t subset_test = 0;   // mnist; 0 = all
  std::size_t pairs = 0;         // verification pairs sampled in eval
};

struct ExperimentConfig {
  DataConfig data;
  std::string layers_text;  // compact layer notation, ';'-separated
  std::size_t feature_dim = 2;
  int m = 1;
  LambdaSchedule lambda_schedule;
  TrainConfig optim;
  std::filesystem::path output_dir = "out";
};

// Strict INI-style key=value parser; '#' starts a comment. Unknown sections
// or keys raise ConfigError naming the key and line.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// Full effective configuration, reparseable by parse_config_text.
std::string resolved_config_text(const ExperimentConfig& config);

// Expands the compact layer notation against a concrete input shape.
//   conv KxK C [xN] [stride S] [pad P]   N conv+prelu blocks
//   pool | flatten | prelu | dense U
NetworkSpec resolve_network(const ExperimentConfig& config,
                            const std::vector<std::size_t>& input_shape);

/// Loads the dataset named by [data] (honoring LMSX_DATA_DIR for mnist).
DatasetSplit load_dataset(const ExperimentConfig& config);

/// Per-sample input shape of the configured data source.
std::vector<std::size_t> input_shape_of(const ExperimentConfig& config);

}  // namespace lmsx

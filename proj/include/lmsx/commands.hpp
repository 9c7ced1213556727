#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lmsx/config.hpp"
#include "lmsx/metrics.hpp"
#include "lmsx/serialize.hpp"

namespace lmsx {

// --- fetch ---

struct RemoteFile {
  std::string filename;
  std::string url;
  std::string md5_hex;
};

struct DatasetRegistry {
  std::string name;
  std::vector<RemoteFile> files;
};

using Downloader = std::function<std::vector<std::uint8_t>(const std::string& url)>;

DatasetRegistry mnist_registry();
Downloader http_downloader();
std::string md5_hex(std::span<const std::uint8_t> bytes);

struct FetchResult {
  int downloaded = 0;
  int kept = 0;
};

// Idempotent: existing files with matching checksums are kept; mismatches
// are reported and re-downloaded.
FetchResult fetch_dataset(const DatasetRegistry& registry, const std::filesystem::path& dest,
                          const Downloader& download, std::ostream& log = std::cout);

// --- train/eval state serialization ---

std::vector<NamedTensor> state_to_tensors(const NetworkSpec& spec, const TrainState& state);
TrainState tensors_to_state(const NetworkSpec& spec, int num_classes,
                            const std::vector<NamedTensor>& tensors);

// --- commands ---

struct TrainArtifacts {
  std::filesystem::path metrics_csv;
  std::filesystem::path params;
  std::filesystem::path resolved_config;
  std::optional<std::filesystem::path> features_train;
  std::optional<std::filesystem::path> features_test;
  double final_train_loss = 0.0;
};

TrainArtifacts cmd_train(const ExperimentConfig& config, std::ostream& log = std::cout);

struct EvalReport {
  double accuracy = 0.0;
  std::filesystem::path confusion_csv;
  std::filesystem::path angular_stats_csv;
  std::optional<std::filesystem::path> verification_csv;
};

EvalReport cmd_eval(const std::filesystem::path& params_path, const ExperimentConfig& config,
                    std::ostream& log = std::cout);

struct GradcheckRow {
  int m = 0;
  std::uint64_t seed = 0;
  double max_relative_error = 0.0;
  bool passed = false;
};

struct GradcheckOutcome {
  bool all_passed = true;
  std::vector<GradcheckRow> rows;
};

// Finite-difference sweep of the loss gradients on random instances
// (N=8, D=5, K=6; lambda in {0, 1, 100}); samples with a target cosine
// within 1e-4 of a segment boundary are redrawn.
GradcheckOutcome cmd_gradcheck(const std::vector<int>& margins,
                               const std::vector<std::uint64_t>& seeds, double tolerance,
                               std::ostream& log = std::cout);

struct Figure1Row {
  int m = 0;
  double min_interclass_angle = 0.0;
  double max_spread = 0.0;
  double mean_spread = 0.0;
  double margin_proxy = 0.0;
};

struct Figure1Outcome {
  std::vector<Figure1Row> per_m;
  std::vector<std::filesystem::path> feature_files;
  std::filesystem::path summary_csv;
};

// Trains the configured feature_dim=2 network once per margin in {1,2,3,4},
// exporting train-split features and angular statistics per margin.
Figure1Outcome cmd_figure1(const ExperimentConfig& config,
                           std::optional<std::uint64_t> seed_override = std::nullopt,
                           std::ostream& log = std::cout);

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRow>& history);

}  // namespace lmsx

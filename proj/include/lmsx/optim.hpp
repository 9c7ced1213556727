#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lmsx/data.hpp"
#include "lmsx/loss.hpp"
#include "lmsx/network.hpp"

namespace lmsx {

struct TrainConfig {
  double learning_rate = 0.1;
  std::vector<long> lr_drop_iterations;  // strictly increasing
  double lr_drop_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t batch_size = 256;
  long max_iterations = 0;
  Margin margin;
  LambdaSchedule lambda_schedule;
  std::uint64_t seed = 0;
  long eval_interval = 0;  // 0 = no validation passes
};

/// Piecewise-constant staircase; each listed drop applies from its iteration on.
double lr_at(const TrainConfig& config, long iteration);

struct MetricsRow {
  long iteration = 0;
  double lambda = 0.0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_error;
};

struct TrainState {
  long iteration = 0;
  NetworkParams net_params;
  NetworkParams net_velocity;
  Tensor classifier;           // K x D, bias-free
  Tensor classifier_velocity;  // K x D
  double lambda = 0.0;
  std::vector<MetricsRow> history;
};

// v <- momentum * v - lr * (g + weight_decay * p); p <- p + v.
// decay_this selects which tensors receive weight decay.
void sgd_step(Tensor& param, Tensor& velocity, const Tensor& grad, double lr,
              double momentum, double weight_decay);

// Observes each completed iteration; lambda/lr are the values actually used.
using TrainHook =
    std::function<void(long iteration, double lambda, double lr, double loss)>;

// Computes loss + gradients for a feature batch against the classifier.
using LossFn = std::function<LossResult(const Tensor& features, std::span<const int> labels,
                                        const Tensor& classifier, double lambda)>;

struct TrainOptions {
  TrainHook hook;     // optional
  LossFn loss_fn;     // defaults to the blended L-Softmax loss
  int num_classes = 0;  // defaults to dataset num_classes
};

// Mini-batch SGD over the feature network plus the bias-free classifier.
// Epoch-wise seeded shuffling; weight decay on weights and PReLU slopes but
// not biases; one metrics row per iteration. Deterministic for a fixed seed.
TrainState train(const NetworkSpec& spec, const DatasetSplit& data, const TrainConfig& config,
                 const TrainOptions& options = {});

/// Validation error (1 - accuracy) of a state on a labeled set.
double eval_error(const NetworkSpec& spec, const TrainState& state, const LabeledData& data);

}  // namespace lmsx

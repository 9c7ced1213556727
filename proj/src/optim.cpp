#include "lmsx/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lmsx/errors.hpp"
#include "lmsx/metrics.hpp"

namespace lmsx {
namespace {

void require_finite_grad(const Tensor& g, const char* what) {
  if (!g.all_finite()) {
    throw NonFiniteGradientError(std::string("non-finite gradient in ") + what +
                                 "; training aborted");
  }
}

Tensor slice_batch(const Tensor& features, std::span<const std::size_t> rows) {
  std::vector<std::size_t> shape = features.shape();
  shape[0] = rows.size();
  Tensor out(shape);
  const std::size_t stride = features.size() / features.extent(0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* src = features.data() + rows[r] * stride;
    std::copy(src, src + stride, out.data() + r * stride);
  }
  return out;
}

int max_label(const std::vector<int>& labels) {
  int m = 0;
  for (int l : labels) m = std::max(m, l);
  return m;
}

}  // namespace

double lr_at(const TrainConfig& config, long iteration) {
  double lr = config.learning_rate;
  for (long drop : config.lr_drop_iterations) {
    if (iteration >= drop) lr *= config.lr_drop_factor;
  }
  return lr;
}

void sgd_step(Tensor& param, Tensor& velocity, const Tensor& grad, double lr,
              double momentum, double weight_decay) {
  if (!param.same_shape(grad) || !param.same_shape(velocity)) {
    throw ShapeMismatchError("sgd_step: parameter " + shape_to_string(param.shape()) +
                             ", velocity " + shape_to_string(velocity.shape()) +
                             ", gradient " + shape_to_string(grad.shape()));
  }
  require_finite_grad(grad, "sgd_step");
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] - lr * (grad[i] + weight_decay * param[i]);
    param[i] += velocity[i];
  }
}

TrainState train(const NetworkSpec& spec, const DatasetSplit& data, const TrainConfig& config,
                 const TrainOptions& options) {
  if (data.train.size() == 0) throw EmptySplitError("training split is empty");
  if (config.max_iterations < 0) throw Error("max_iterations must be >= 0");
  if (!std::is_sorted(config.lr_drop_iterations.begin(), config.lr_drop_iterations.end()) ||
      std::adjacent_find(config.lr_drop_iterations.begin(), config.lr_drop_iterations.end()) !=
          config.lr_drop_iterations.end()) {
    throw Error("lr_drop_iterations must be strictly increasing");
  }
  validate_network(spec);

  const int num_classes = options.num_classes > 0
                              ? options.num_classes
                              : (data.num_classes > 0 ? data.num_classes
                                                      : max_label(data.train.labels) + 1);

  TrainState state;
  state.net_params = init_params(spec, config.seed);
  state.net_velocity.resize(state.net_params.size());
  for (std::size_t i = 0; i < state.net_params.size(); ++i) {
    auto& v = state.net_velocity[i];
    const auto& p = state.net_params[i];
    if (p.weights.size()) v.weights = Tensor::zeros_like(p.weights);
    if (p.bias.size()) v.bias = Tensor::zeros_like(p.bias);
    if (p.slopes.size()) v.slopes = Tensor::zeros_like(p.slopes);
  }
  {
    // Classifier rows drawn from the same stream, after the network params.
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const double stddev = std::sqrt(2.0 / static_cast<double>(spec.feature_dim));
    std::normal_distribution<double> dist(0.0, stddev);
    state.classifier = Tensor({static_cast<std::size_t>(num_classes), spec.feature_dim});
    for (std::size_t i = 0; i < state.classifier.size(); ++i) state.classifier[i] = dist(rng);
    state.classifier_velocity = Tensor::zeros_like(state.classifier);
  }

  LossFn loss_fn = options.loss_fn;
  if (!loss_fn) {
    const int m = config.margin.value;
    loss_fn = [m](const Tensor& features, std::span<const int> labels, const Tensor& classifier,
                  double lambda) {
      return lsoftmax_backward(features, labels, classifier, m, lambda);
    };
  }

  const std::size_t n = data.train.size();
  const std::size_t batch = std::min<std::size_t>(config.batch_size, n);
  std::mt19937_64 shuffle_rng(config.seed + 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;  // forces a shuffle on first use

  state.history.reserve(static_cast<std::size_t>(config.max_iterations));
  for (long it = 0; it < config.max_iterations; ++it) {
    if (cursor + batch > n) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
    }
    std::span<const std::size_t> rows(order.data() + cursor, batch);
    cursor += batch;

    Tensor batch_x = slice_batch(data.train.features, rows);
    std::vector<int> batch_y(batch);
    for (std::size_t i = 0; i < batch; ++i) batch_y[i] = data.train.labels[rows[i]];

    const double lambda = lambda_at(config.lambda_schedule, it);
    const double lr = lr_at(config, it);

    ForwardTrace trace = network_forward_trace(spec, state.net_params, batch_x);
    const Tensor& features = trace.activations.back();
    LossResult loss = loss_fn(features, batch_y, state.classifier, lambda);
    NetworkGrads grads = network_backward(spec, state.net_params, trace, loss.grad_x);

    for (std::size_t li = 0; li < state.net_params.size(); ++li) {
      auto& p = state.net_params[li];
      auto& v = state.net_velocity[li];
      auto& g = grads.layers[li];
      if (p.weights.size())
        sgd_step(p.weights, v.weights, g.weights, lr, config.momentum, config.weight_decay);
      if (p.bias.size()) sgd_step(p.bias, v.bias, g.bias, lr, config.momentum, 0.0);
      if (p.slopes.size())
        sgd_step(p.slopes, v.slopes, g.slopes, lr, config.momentum, config.weight_decay);
    }
    sgd_step(state.classifier, state.classifier_velocity, loss.grad_w, lr, config.momentum,
             config.weight_decay);

    state.iteration = it + 1;
    state.lambda = lambda;

    MetricsRow row{it, lambda, lr, loss.loss, std::nullopt};
    if (config.eval_interval > 0 && data.val.size() > 0 &&
        (it + 1) % config.eval_interval == 0) {
      row.val_error = eval_error(spec, state, data.val);
    }
    state.history.push_back(row);
    if (options.hook) options.hook(it, lambda, lr, loss.loss);
  }
  return state;
}

double eval_error(const NetworkSpec& spec, const TrainState& state, const LabeledData& data) {
  const Tensor features = network_forward(spec, state.net_params, data.features);
  return 1.0 - accuracy(features, data.labels, state.classifier);
}

}  // namespace lmsx

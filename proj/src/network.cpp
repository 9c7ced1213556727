#include "lmsx/network.hpp"

#include <cmath>
#include <random>

#include "lmsx/errors.hpp"

namespace lmsx {

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in_width = in;
  s.out_width = out;
  return s;
}

LayerSpec LayerSpec::conv2d(const ConvSpec& spec) {
  LayerSpec s;
  s.kind = LayerKind::Conv2d;
  s.conv = spec;
  return s;
}

LayerSpec LayerSpec::maxpool() {
  LayerSpec s;
  s.kind = LayerKind::MaxPool2x2;
  return s;
}

LayerSpec LayerSpec::prelu(std::size_t channels) {
  LayerSpec s;
  s.kind = LayerKind::PReLU;
  s.channels = channels;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

std::vector<std::vector<std::size_t>> shape_chain(const NetworkSpec& spec) {
  std::vector<std::vector<std::size_t>> shapes;
  shapes.push_back(spec.input_shape);
  auto cur = spec.input_shape;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerSpec& layer = spec.layers[li];
    const std::string where = "layer " + std::to_string(li);
    switch (layer.kind) {
      case LayerKind::Dense:
        if (cur.size() != 1 || cur[0] != layer.in_width) {
          throw ShapeMismatchError(where + " (dense " + std::to_string(layer.in_width) + "->" +
                                   std::to_string(layer.out_width) + ") cannot consume shape " +
                                   shape_to_string(cur));
        }
        cur = {layer.out_width};
        break;
      case LayerKind::Conv2d: {
        if (cur.size() != 3 || cur[0] != layer.conv.in_channels) {
          throw ShapeMismatchError(where + " (conv) cannot consume shape " +
                                   shape_to_string(cur));
        }
        if (cur[1] + 2 * layer.conv.padding < layer.conv.kernel ||
            cur[2] + 2 * layer.conv.padding < layer.conv.kernel) {
          throw ShapeMismatchError(where + " (conv) kernel exceeds padded input " +
                                   shape_to_string(cur));
        }
        cur = {layer.conv.out_channels, layer.conv.out_extent(cur[1]),
               layer.conv.out_extent(cur[2])};
        break;
      }
      case LayerKind::MaxPool2x2:
        if (cur.size() != 3 || cur[1] < 2 || cur[2] < 2) {
          throw ShapeMismatchError(where + " (maxpool) cannot consume shape " +
                                   shape_to_string(cur));
        }
        cur = {cur[0], cur[1] / 2, cur[2] / 2};
        break;
      case LayerKind::PReLU: {
        const std::size_t channels = cur.empty() ? 0 : cur[0];
        if (cur.empty() || channels != layer.channels) {
          throw ShapeMismatchError(where + " (prelu, " + std::to_string(layer.channels) +
                                   " slopes) cannot consume shape " + shape_to_string(cur));
        }
        break;
      }
      case LayerKind::Flatten:
        cur = {shape_product(cur)};
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

void validate_network(const NetworkSpec& spec) {
  if (spec.input_shape.empty()) throw ShapeMismatchError("network input shape is empty");
  const auto shapes = shape_chain(spec);
  const auto& out = shapes.back();
  if (out.size() != 1 || out[0] != spec.feature_dim) {
    throw ShapeMismatchError("network output shape " + shape_to_string(out) +
                             " does not match feature_dim " + std::to_string(spec.feature_dim));
  }
}

namespace {

Tensor gaussian(std::vector<std::size_t> shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

// Batch-ify a per-sample shape.
std::vector<std::size_t> with_batch(std::size_t n, const std::vector<std::size_t>& per_sample) {
  std::vector<std::size_t> s{n};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

}  // namespace

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  validate_network(spec);
  std::mt19937_64 rng(seed);
  NetworkParams params;
  params.reserve(spec.layers.size());
  for (const LayerSpec& layer : spec.layers) {
    LayerParams p;
    switch (layer.kind) {
      case LayerKind::Dense: {
        const double stddev = std::sqrt(2.0 / static_cast<double>(layer.in_width));
        p.weights = gaussian({layer.out_width, layer.in_width}, stddev, rng);
        p.bias = Tensor({layer.out_width});
        break;
      }
      case LayerKind::Conv2d: {
        const std::size_t fan_in =
            layer.conv.in_channels * layer.conv.kernel * layer.conv.kernel;
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        p.weights = gaussian({layer.conv.out_channels, layer.conv.in_channels,
                              layer.conv.kernel, layer.conv.kernel},
                             stddev, rng);
        p.bias = Tensor({layer.conv.out_channels});
        break;
      }
      case LayerKind::PReLU:
        p.slopes = Tensor({layer.channels});
        p.slopes.fill(0.25);
        break;
      case LayerKind::MaxPool2x2:
      case LayerKind::Flatten:
        break;
    }
    params.push_back(std::move(p));
  }
  return params;
}

ForwardTrace network_forward_trace(const NetworkSpec& spec, const NetworkParams& params,
                                   const Tensor& batch) {
  if (params.size() != spec.layers.size()) {
    throw ShapeMismatchError("parameter count " + std::to_string(params.size()) +
                             " != layer count " + std::to_string(spec.layers.size()));
  }
  if (batch.ndim() < 1 ||
      std::vector<std::size_t>(batch.shape().begin() + 1, batch.shape().end()) !=
          spec.input_shape) {
    throw ShapeMismatchError("batch shape " + shape_to_string(batch.shape()) +
                             " does not carry per-sample shape " +
                             shape_to_string(spec.input_shape));
  }

  ForwardTrace trace;
  trace.activations.reserve(spec.layers.size() + 1);
  trace.activations.push_back(batch);
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerSpec& layer = spec.layers[li];
    const Tensor& x = trace.activations.back();
    Tensor y;
    switch (layer.kind) {
      case LayerKind::Dense:
        y = dense_forward(x, params[li].weights, params[li].bias);
        break;
      case LayerKind::Conv2d:
        y = conv2d_forward(x, params[li].weights, params[li].bias, layer.conv);
        break;
      case LayerKind::MaxPool2x2:
        y = maxpool2x2_forward(x);
        break;
      case LayerKind::PReLU:
        y = prelu_forward(x, params[li].slopes);
        break;
      case LayerKind::Flatten:
        y = flatten_forward(x);
        break;
    }
    if (!y.all_finite()) {
      throw NonFiniteGradientError("non-finite activation out of layer " + std::to_string(li));
    }
    trace.activations.push_back(std::move(y));
  }
  return trace;
}

Tensor network_forward(const NetworkSpec& spec, const NetworkParams& params,
                       const Tensor& batch) {
  return network_forward_trace(spec, params, batch).activations.back();
}

NetworkGrads network_backward(const NetworkSpec& spec, const NetworkParams& params,
                              const ForwardTrace& trace, const Tensor& grad_features) {
  if (trace.activations.size() != spec.layers.size() + 1) {
    throw ShapeMismatchError("trace does not match network depth");
  }
  NetworkGrads grads;
  grads.layers.resize(spec.layers.size());

  Tensor upstream = grad_features;
  for (std::size_t r = spec.layers.size(); r-- > 0;) {
    const LayerSpec& layer = spec.layers[r];
    const Tensor& x = trace.activations[r];
    switch (layer.kind) {
      case LayerKind::Dense: {
        DenseGrads g = dense_backward(upstream, x, params[r].weights);
        grads.layers[r].weights = std::move(g.weights);
        grads.layers[r].bias = std::move(g.bias);
        upstream = std::move(g.input);
        break;
      }
      case LayerKind::Conv2d: {
        ConvGrads g = conv2d_backward(upstream, x, params[r].weights, layer.conv);
        grads.layers[r].weights = std::move(g.weights);
        grads.layers[r].bias = std::move(g.bias);
        upstream = std::move(g.input);
        break;
      }
      case LayerKind::MaxPool2x2:
        upstream = maxpool2x2_backward(upstream, x);
        break;
      case LayerKind::PReLU: {
        PreluGrads g = prelu_backward(upstream, x, params[r].slopes);
        grads.layers[r].slopes = std::move(g.slopes);
        upstream = std::move(g.input);
        break;
      }
      case LayerKind::Flatten:
        upstream = flatten_backward(upstream, x.shape());
        break;
    }
    if (!upstream.all_finite()) {
      throw NonFiniteGradientError("non-finite gradient out of layer " + std::to_string(r));
    }
  }
  grads.input = std::move(upstream);
  return grads;
}

}  // namespace lmsx

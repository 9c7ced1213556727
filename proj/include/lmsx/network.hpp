#pragma once

#include <cstdint>
#include <vector>

#include "lmsx/layers.hpp"
#include "lmsx/tensor.hpp"

namespace lmsx {

enum class LayerKind { Dense, Conv2d, MaxPool2x2, PReLU, Flatten };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  // dense
  std::size_t in_width = 0;
  std::size_t out_width = 0;
  // conv2d
  ConvSpec conv;
  // prelu
  std::size_t channels = 0;

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv2d(const ConvSpec& spec);
  static LayerSpec maxpool();
  static LayerSpec prelu(std::size_t channels);
  static LayerSpec flatten();
};

struct NetworkSpec {
  std::vector<std::size_t> input_shape;  // per-sample shape, no batch axis
  std::vector<LayerSpec> layers;
  std::size_t feature_dim = 0;  // width of the final per-sample output
};

// Per-layer parameters; unused tensors stay empty.
struct LayerParams {
  Tensor weights;
  Tensor bias;
  Tensor slopes;
};

using NetworkParams = std::vector<LayerParams>;

// Output shape of each layer (per-sample, no batch axis), validating
// composition; index 0 is the input shape, index i+1 follows layer i.
std::vector<std::vector<std::size_t>> shape_chain(const NetworkSpec& spec);

/// Validates the spec and checks the final output is [feature_dim].
void validate_network(const NetworkSpec& spec);

// Fan-in-scaled Gaussian init (std = sqrt(2 / fan_in)) for weights,
// zero biases, PReLU slopes at 0.25. Deterministic per seed.
NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

struct ForwardTrace {
  // activations[0] is the input batch; activations[i + 1] is layer i's output.
  std::vector<Tensor> activations;
};

Tensor network_forward(const NetworkSpec& spec, const NetworkParams& params,
                       const Tensor& batch);
ForwardTrace network_forward_trace(const NetworkSpec& spec, const NetworkParams& params,
                                   const Tensor& batch);

struct NetworkGrads {
  std::vector<LayerParams> layers;
  Tensor input;
};

NetworkGrads network_backward(const NetworkSpec& spec, const NetworkParams& params,
                              const ForwardTrace& trace, const Tensor& grad_features);

}  // namespace lmsx

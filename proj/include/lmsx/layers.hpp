#pragma once

#include "lmsx/tensor.hpp"

namespace lmsx {

// y = x W^T + b for x of shape [N, Din], W [Dout, Din], b [Dout].
Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;    // [N, Din]
  Tensor weights;  // [Dout, Din]
  Tensor bias;     // [Dout]
};
DenseGrads dense_backward(const Tensor& grad_out, const Tensor& x, const Tensor& weights);

struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 3;  // square
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_extent(std::size_t in) const {
    return (in + 2 * padding - kernel) / stride + 1;
  }
};

// Direct convolution (cross-correlation), zero padding.
// x is [N, C, H, W], weights [OC, C, k, k], bias [OC].
Tensor conv2d_forward(const Tensor& x, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec);

struct ConvGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};
ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& x, const Tensor& weights,
                          const ConvSpec& spec);

// 2x2 max pooling with stride 2; odd trailing rows/columns are truncated.
// Gradient goes to the first (row-major) occurrence of the maximum.
Tensor maxpool2x2_forward(const Tensor& x);
Tensor maxpool2x2_backward(const Tensor& grad_out, const Tensor& x);

// PReLU with one learnable slope per channel: y = x > 0 ? x : a_c * x.
// Channel axis is axis 1 for 4-D input and the feature axis for 2-D input.
Tensor prelu_forward(const Tensor& x, const Tensor& slopes);

struct PreluGrads {
  Tensor input;
  Tensor slopes;
};
PreluGrads prelu_backward(const Tensor& grad_out, const Tensor& x, const Tensor& slopes);

Tensor flatten_forward(const Tensor& x);
Tensor flatten_backward(const Tensor& grad_out, const std::vector<std::size_t>& input_shape);

}  // namespace lmsx

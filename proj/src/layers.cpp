#include "lmsx/layers.hpp"

#include <algorithm>

namespace lmsx {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.ndim() != rank) {
    throw ShapeMismatchError(std::string(what) + ": expected rank " + std::to_string(rank) +
                             ", got shape " + shape_to_string(t.shape()));
  }
}

std::size_t channel_extent(const Tensor& x) {
  if (x.ndim() == 4) return x.extent(1);
  if (x.ndim() == 2) return x.extent(1);
  throw ShapeMismatchError("prelu expects rank-2 or rank-4 input, got shape " +
                           shape_to_string(x.shape()));
}

// Maps a flat index to its channel for 2-D [N, C] or 4-D [N, C, H, W] data.
std::size_t channel_of(const Tensor& x, std::size_t flat) {
  if (x.ndim() == 2) return flat % x.extent(1);
  const std::size_t hw = x.extent(2) * x.extent(3);
  return (flat / hw) % x.extent(1);
}

}  // namespace

Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  require_rank(x, 2, "dense input");
  require_rank(weights, 2, "dense weights");
  const std::size_t n = x.extent(0), din = x.extent(1), dout = weights.extent(0);
  if (weights.extent(1) != din) {
    throw ShapeMismatchError("dense: weights expect " + std::to_string(weights.extent(1)) +
                             " inputs, got " + std::to_string(din));
  }
  require_shape(bias, {dout}, "dense bias");

  Tensor y({n, dout});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < dout; ++o) {
      double s = bias[o];
      for (std::size_t j = 0; j < din; ++j) s += x.at(i, j) * weights.at(o, j);
      y.at(i, o) = s;
    }
  }
  return y;
}

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& x, const Tensor& weights) {
  const std::size_t n = x.extent(0), din = x.extent(1), dout = weights.extent(0);
  require_shape(grad_out, {n, dout}, "dense grad_out");

  DenseGrads g{Tensor({n, din}), Tensor({dout, din}), Tensor({dout})};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < dout; ++o) {
      const double go = grad_out.at(i, o);
      g.bias[o] += go;
      for (std::size_t j = 0; j < din; ++j) {
        g.input.at(i, j) += go * weights.at(o, j);
        g.weights.at(o, j) += go * x.at(i, j);
      }
    }
  }
  return g;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec) {
  require_rank(x, 4, "conv input");
  require_shape(weights, {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel},
                "conv weights");
  require_shape(bias, {spec.out_channels}, "conv bias");
  if (x.extent(1) != spec.in_channels) {
    throw ShapeMismatchError("conv: input has " + std::to_string(x.extent(1)) +
                             " channels, spec expects " + std::to_string(spec.in_channels));
  }
  const std::size_t n = x.extent(0), h = x.extent(2), w = x.extent(3);
  if (h + 2 * spec.padding < spec.kernel || w + 2 * spec.padding < spec.kernel) {
    throw ShapeMismatchError("conv: kernel " + std::to_string(spec.kernel) +
                             " larger than padded input " + shape_to_string(x.shape()));
  }
  const std::size_t oh = spec.out_extent(h), ow = spec.out_extent(w);

  Tensor y({n, spec.out_channels, oh, ow});
  const double* xp = x.data();
  const double* wp = weights.data();
  double* yp = y.data();
  const std::size_t kk = spec.kernel;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
      double* yrow = yp + (i * spec.out_channels + oc) * oh * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = bias[oc];
          for (std::size_t ic = 0; ic < spec.in_channels; ++ic) {
            const double* xplane = xp + (i * spec.in_channels + ic) * h * w;
            const double* wplane = wp + (oc * spec.in_channels + ic) * kk * kk;
            for (std::size_t ky = 0; ky < kk; ++ky) {
              const long iy = static_cast<long>(oy * spec.stride + ky) -
                              static_cast<long>(spec.padding);
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              const double* xrow = xplane + static_cast<std::size_t>(iy) * w;
              const double* wrow = wplane + ky * kk;
              const long ix0 = static_cast<long>(ox * spec.stride) -
                               static_cast<long>(spec.padding);
              for (std::size_t kx = 0; kx < kk; ++kx) {
                const long ix = ix0 + static_cast<long>(kx);
                if (ix < 0 || ix >= static_cast<long>(w)) continue;
                acc += xrow[ix] * wrow[kx];
              }
            }
          }
          yrow[oy * ow + ox] = acc;
        }
      }
    }
  }
  return y;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& x, const Tensor& weights,
                          const ConvSpec& spec) {
  const std::size_t n = x.extent(0), h = x.extent(2), w = x.extent(3);
  const std::size_t oh = spec.out_extent(h), ow = spec.out_extent(w);
  require_shape(grad_out, {n, spec.out_channels, oh, ow}, "conv grad_out");

  ConvGrads g{Tensor::zeros_like(x), Tensor::zeros_like(weights), Tensor({spec.out_channels})};
  const double* xp = x.data();
  const double* wp = weights.data();
  const double* gop = grad_out.data();
  double* gxp = g.input.data();
  double* gwp = g.weights.data();
  const std::size_t kk = spec.kernel;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
      const double* gorow = gop + (i * spec.out_channels + oc) * oh * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double go = gorow[oy * ow + ox];
          g.bias[oc] += go;
          for (std::size_t ic = 0; ic < spec.in_channels; ++ic) {
            const std::size_t xbase = (i * spec.in_channels + ic) * h * w;
            const std::size_t wbase = (oc * spec.in_channels + ic) * kk * kk;
            for (std::size_t ky = 0; ky < kk; ++ky) {
              const long iy = static_cast<long>(oy * spec.stride + ky) -
                              static_cast<long>(spec.padding);
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              const std::size_t xrow = xbase + static_cast<std::size_t>(iy) * w;
              const std::size_t wrow = wbase + ky * kk;
              const long ix0 = static_cast<long>(ox * spec.stride) -
                               static_cast<long>(spec.padding);
              for (std::size_t kx = 0; kx < kk; ++kx) {
                const long ix = ix0 + static_cast<long>(kx);
                if (ix < 0 || ix >= static_cast<long>(w)) continue;
                gxp[xrow + static_cast<std::size_t>(ix)] += go * wp[wrow + kx];
                gwp[wrow + kx] += go * xp[xrow + static_cast<std::size_t>(ix)];
              }
            }
          }
        }
      }
    }
  }
  return g;
}

Tensor maxpool2x2_forward(const Tensor& x) {
  require_rank(x, 4, "maxpool input");
  const std::size_t n = x.extent(0), c = x.extent(1);
  const std::size_t oh = x.extent(2) / 2, ow = x.extent(3) / 2;
  if (oh == 0 || ow == 0) {
    throw ShapeMismatchError("maxpool: spatial extents too small in " +
                             shape_to_string(x.shape()));
  }
  Tensor y({n, c, oh, ow});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double best = x.at(i, ch, 2 * oy, 2 * ox);
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx)
              best = std::max(best, x.at(i, ch, 2 * oy + dy, 2 * ox + dx));
          y.at(i, ch, oy, ox) = best;
        }
  return y;
}

Tensor maxpool2x2_backward(const Tensor& grad_out, const Tensor& x) {
  const std::size_t n = x.extent(0), c = x.extent(1);
  const std::size_t oh = x.extent(2) / 2, ow = x.extent(3) / 2;
  require_shape(grad_out, {n, c, oh, ow}, "maxpool grad_out");

  Tensor gx = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          // first occurrence in row-major scan wins
          std::size_t by = 2 * oy, bx = 2 * ox;
          double best = x.at(i, ch, by, bx);
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const double v = x.at(i, ch, 2 * oy + dy, 2 * ox + dx);
              if (v > best) {
                best = v;
                by = 2 * oy + dy;
                bx = 2 * ox + dx;
              }
            }
          gx.at(i, ch, by, bx) += grad_out.at(i, ch, oy, ox);
        }
  return gx;
}

Tensor prelu_forward(const Tensor& x, const Tensor& slopes) {
  require_shape(slopes, {channel_extent(x)}, "prelu slopes");
  Tensor y = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    y[i] = v > 0.0 ? v : slopes[channel_of(x, i)] * v;
  }
  return y;
}

PreluGrads prelu_backward(const Tensor& grad_out, const Tensor& x, const Tensor& slopes) {
  require_shape(slopes, {channel_extent(x)}, "prelu slopes");
  if (!grad_out.same_shape(x)) {
    throw ShapeMismatchError("prelu grad_out shape " + shape_to_string(grad_out.shape()) +
                             " != input shape " + shape_to_string(x.shape()));
  }
  PreluGrads g{Tensor::zeros_like(x), Tensor::zeros_like(slopes)};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const std::size_t c = channel_of(x, i);
    if (v > 0.0) {
      g.input[i] = grad_out[i];
    } else {
      g.input[i] = grad_out[i] * slopes[c];
      g.slopes[c] += grad_out[i] * v;
    }
  }
  return g;
}

Tensor flatten_forward(const Tensor& x) {
  if (x.ndim() < 2) {
    throw ShapeMismatchError("flatten expects rank >= 2, got " + shape_to_string(x.shape()));
  }
  const std::size_t n = x.extent(0);
  return Tensor({n, x.size() / n}, x.values());
}

Tensor flatten_backward(const Tensor& grad_out, const std::vector<std::size_t>& input_shape) {
  if (grad_out.size() != shape_product(input_shape)) {
    throw ShapeMismatchError("flatten backward: size mismatch between " +
                             shape_to_string(grad_out.shape()) + " and " +
                             shape_to_string(input_shape));
  }
  return Tensor(input_shape, grad_out.values());
}

}  // namespace lmsx

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lmsx/tensor.hpp"

namespace lmsx {

/// Integer angular-margin multiplier; m = 1 is the plain softmax regime.
struct Margin {
  int value = 1;
  Margin() = default;
  explicit Margin(int m);
};

// Windowed multiplicative annealing: lambda(t) = max(min, initial * gamma^floor(t/window)).
struct LambdaSchedule {
  double initial = 0.0;
  double min = 0.0;
  double gamma = 1.0;   // in (0, 1]
  long window = 1;      // iterations per decay step, >= 1
};

double lambda_at(const LambdaSchedule& schedule, long iteration);

struct LossResult {
  double loss = 0.0;
  Tensor grad_x;   // N x D (empty unless backward)
  Tensor grad_w;   // K x D (empty unless backward)
  Tensor logits;   // N x K, the blended scores actually used
};

// Margin score of the target class: |w||x| * psi(cos theta).
// Throws ZeroNormError when either norm is below 1e-12.
double target_logit(std::span<const double> w, std::span<const double> x, int m);

// d target_logit / dx and / dw, assembled by chain rule through psi.
// Buffers must hold w.size() doubles. Returns the logit value.
double target_logit_grads(std::span<const double> w, std::span<const double> x, int m,
                          std::span<double> df_dx, std::span<double> df_dw);

namespace m2 {

// The dedicated m = 2 formulas, written out term by term:
//   f      = (-1)^k 2 (w.x)^2 / (|w||x|) - (2k + (-1)^k) |w||x|
//   df/dx  = (-1)^k (4 (w.x) w / (|w||x|) - 2 (w.x)^2 x / (|w||x|^3))
//            - (2k + (-1)^k) |w| x / |x|
// and symmetrically for df/dw, with k = 1 iff cos(theta) <= 0.
double target_logit(std::span<const double> w, std::span<const double> x);
double target_logit_grads(std::span<const double> w, std::span<const double> x,
                          std::span<double> df_dx, std::span<double> df_dw);

}  // namespace m2

// Blended L-Softmax loss over a batch. X is N x D, W is K x D (one row per
// class, no bias), y holds labels in [0, K). The target-class logit is
// (lambda * w.x + |w||x| psi(cos theta)) / (1 + lambda); other logits are
// plain inner products. Loss is the mean cross-entropy, computed with
// per-sample max subtraction.
LossResult lsoftmax_forward(const Tensor& X, std::span<const int> y, const Tensor& W,
                            int m, double lambda);

/// As lsoftmax_forward, plus exact analytic grad_x and grad_w.
LossResult lsoftmax_backward(const Tensor& X, std::span<const int> y, const Tensor& W,
                             int m, double lambda);

}  // namespace lmsx

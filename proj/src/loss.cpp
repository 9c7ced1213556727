#include "lmsx/loss.hpp"

#include <cmath>
#include <string>

#include "lmsx/angular.hpp"
#include "lmsx/errors.hpp"

namespace lmsx {
namespace {

constexpr double kNormEpsilon = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double checked_norm(std::span<const double> v, const char* what) {
  const double n = std::sqrt(dot(v, v));
  if (n < kNormEpsilon) {
    throw ZeroNormError(std::string(what) + " has norm below 1e-12; no angle is defined");
  }
  return n;
}

void require_same_dim(std::size_t dw, std::size_t dx) {
  if (dw != dx) {
    throw ShapeMismatchError("feature dimension mismatch: weights have " + std::to_string(dw) +
                             ", features have " + std::to_string(dx));
  }
}

void validate_batch(const Tensor& X, std::span<const int> y, const Tensor& W) {
  if (X.ndim() != 2 || W.ndim() != 2) {
    throw ShapeMismatchError("lsoftmax expects 2-D feature and weight matrices, got " +
                             shape_to_string(X.shape()) + " and " + shape_to_string(W.shape()));
  }
  require_same_dim(W.extent(1), X.extent(1));
  if (y.size() != X.extent(0)) {
    throw ShapeMismatchError("label count " + std::to_string(y.size()) +
                             " != batch size " + std::to_string(X.extent(0)));
  }
  const int num_classes = static_cast<int>(W.extent(0));
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= num_classes) {
      throw Error("label " + std::to_string(y[i]) + " at sample " + std::to_string(i) +
                  " out of range [0, " + std::to_string(num_classes) + ")");
    }
  }
}

struct TargetTerms {
  double f = 0.0;        // |w||x| psi(c)
  double psi = 0.0;      // psi(c)
  double dpsi = 0.0;     // psi'(c)
  double c = 0.0;        // clamped cosine
  double wnorm = 0.0;
  double xnorm = 0.0;
};

TargetTerms target_terms(std::span<const double> w, std::span<const double> x, int m) {
  TargetTerms t;
  t.wnorm = checked_norm(w, "classifier row");
  t.xnorm = checked_norm(x, "feature vector");
  t.c = angular::clamp_cosine(dot(w, x) / (t.wnorm * t.xnorm));
  t.psi = angular::psi(t.c, m);
  t.dpsi = angular::psi_derivative(t.c, m);
  t.f = t.wnorm * t.xnorm * t.psi;
  return t;
}

}  // namespace

Margin::Margin(int m) : value(m) {
  if (m < 1) throw Error("margin m must be >= 1, got " + std::to_string(m));
}

double lambda_at(const LambdaSchedule& schedule, long iteration) {
  if (iteration < 0) throw Error("iteration must be >= 0");
  const long window = schedule.window >= 1 ? schedule.window : 1;
  const long steps = iteration / window;
  double lambda = schedule.initial;
  if (schedule.gamma >= 1.0) return std::max(lambda, schedule.min);
  // Repeated multiplication keeps the sequence exactly non-increasing,
  // which pow(gamma, steps) does not guarantee in the last ulp.
  for (long s = 0; s < steps; ++s) {
    lambda *= schedule.gamma;
    if (lambda <= schedule.min) return schedule.min;
    if (lambda < 1e-300) return schedule.min;
  }
  return std::max(lambda, schedule.min);
}

double target_logit(std::span<const double> w, std::span<const double> x, int m) {
  require_same_dim(w.size(), x.size());
  if (m == 1) {
    // exact original softmax regime: w.x without the norm round trip
    checked_norm(w, "classifier row");
    checked_norm(x, "feature vector");
    return dot(w, x);
  }
  return target_terms(w, x, m).f;
}

double target_logit_grads(std::span<const double> w, std::span<const double> x, int m,
                          std::span<double> df_dx, std::span<double> df_dw) {
  require_same_dim(w.size(), x.size());
  if (m == 1) {
    checked_norm(w, "classifier row");
    checked_norm(x, "feature vector");
    for (std::size_t j = 0; j < w.size(); ++j) {
      df_dx[j] = w[j];
      df_dw[j] = x[j];
    }
    return dot(w, x);
  }
  const TargetTerms t = target_terms(w, x, m);
  // f = |w||x| psi(c), c = w.x / (|w||x|):
  //   df/dx = psi'(c) w + (psi(c) - psi'(c) c) |w| x/|x|
  //   df/dw = psi'(c) x + (psi(c) - psi'(c) c) |x| w/|w|
  const double radial = t.psi - t.dpsi * t.c;
  const double xr = radial * t.wnorm / t.xnorm;
  const double wr = radial * t.xnorm / t.wnorm;
  for (std::size_t j = 0; j < w.size(); ++j) {
    df_dx[j] = t.dpsi * w[j] + xr * x[j];
    df_dw[j] = t.dpsi * x[j] + wr * w[j];
  }
  return t.f;
}

namespace m2 {

double target_logit(std::span<const double> w, std::span<const double> x) {
  require_same_dim(w.size(), x.size());
  const double wnorm = checked_norm(w, "classifier row");
  const double xnorm = checked_norm(x, "feature vector");
  const double wx = dot(w, x);
  const int k = (wx / (wnorm * xnorm) <= 0.0) ? 1 : 0;
  const double sign = (k == 0) ? 1.0 : -1.0;
  return sign * 2.0 * wx * wx / (wnorm * xnorm) - (2.0 * k + sign) * wnorm * xnorm;
}

double target_logit_grads(std::span<const double> w, std::span<const double> x,
                          std::span<double> df_dx, std::span<double> df_dw) {
  require_same_dim(w.size(), x.size());
  const double wnorm = checked_norm(w, "classifier row");
  const double xnorm = checked_norm(x, "feature vector");
  const double wx = dot(w, x);
  const int k = (wx / (wnorm * xnorm) <= 0.0) ? 1 : 0;
  const double sign = (k == 0) ? 1.0 : -1.0;
  const double offset = 2.0 * k + sign;
  for (std::size_t j = 0; j < w.size(); ++j) {
    df_dx[j] = sign * (4.0 * wx * w[j] / (wnorm * xnorm) -
                       2.0 * wx * wx * x[j] / (wnorm * xnorm * xnorm * xnorm)) -
               offset * wnorm * x[j] / xnorm;
    df_dw[j] = sign * (4.0 * wx * x[j] / (wnorm * xnorm) -
                       2.0 * wx * wx * w[j] / (xnorm * wnorm * wnorm * wnorm)) -
               offset * xnorm * w[j] / wnorm;
  }
  return sign * 2.0 * wx * wx / (wnorm * xnorm) - offset * wnorm * xnorm;
}

}  // namespace m2

namespace {

// Shared forward pass: blended logits plus per-sample softmax terms.
struct ForwardScratch {
  Tensor logits;                     // N x K
  std::vector<double> probs;         // N x K, softmax of logits
  double loss = 0.0;
};

ForwardScratch forward_pass(const Tensor& X, std::span<const int> y, const Tensor& W,
                            int m, double lambda) {
  validate_batch(X, y, W);
  Margin margin(m);
  if (lambda < 0.0) throw Error("lambda must be >= 0");
  const std::size_t n = X.extent(0);
  const std::size_t d = X.extent(1);
  const std::size_t k = W.extent(0);

  ForwardScratch s;
  s.logits = Tensor({n, k});
  s.probs.assign(n * k, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> xi(X.data() + i * d, d);
    for (std::size_t j = 0; j < k; ++j) {
      std::span<const double> wj(W.data() + j * d, d);
      s.logits.at(i, j) = dot(wj, xi);
    }
    std::span<const double> wy(W.data() + static_cast<std::size_t>(y[i]) * d, d);
    if (margin.value == 1) {
      // psi is the identity and the blend is (lambda f + f)/(1 + lambda);
      // keep the plain inner product bit-exact
      checked_norm(wy, "classifier row");
      checked_norm(xi, "feature vector");
      continue;
    }
    const double f_margin = target_logit(wy, xi, margin.value);
    const double f_plain = s.logits.at(i, static_cast<std::size_t>(y[i]));
    s.logits.at(i, static_cast<std::size_t>(y[i])) =
        (lambda * f_plain + f_margin) / (1.0 + lambda);
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double max_logit = s.logits.at(i, 0);
    for (std::size_t j = 1; j < k; ++j) max_logit = std::max(max_logit, s.logits.at(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      s.probs[i * k + j] = std::exp(s.logits.at(i, j) - max_logit);
      denom += s.probs[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) s.probs[i * k + j] /= denom;
    total += -(s.logits.at(i, static_cast<std::size_t>(y[i])) - max_logit - std::log(denom));
  }
  s.loss = total / static_cast<double>(n);
  return s;
}

}  // namespace

LossResult lsoftmax_forward(const Tensor& X, std::span<const int> y, const Tensor& W,
                            int m, double lambda) {
  ForwardScratch s = forward_pass(X, y, W, m, lambda);
  LossResult result;
  result.loss = s.loss;
  result.logits = std::move(s.logits);
  return result;
}

LossResult lsoftmax_backward(const Tensor& X, std::span<const int> y, const Tensor& W,
                             int m, double lambda) {
  ForwardScratch s = forward_pass(X, y, W, m, lambda);
  const std::size_t n = X.extent(0);
  const std::size_t d = X.extent(1);
  const std::size_t k = W.extent(0);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double blend = 1.0 / (1.0 + lambda);

  LossResult result;
  result.loss = s.loss;
  result.logits = std::move(s.logits);
  result.grad_x = Tensor({n, d});
  result.grad_w = Tensor({k, d});

  std::vector<double> df_dx(d), df_dw(d);
  // Samples in order, classes in order: reductions into grad_w stay
  // bit-reproducible.
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> xi(X.data() + i * d, d);
    const auto yi = static_cast<std::size_t>(y[i]);
    std::span<const double> wy(W.data() + yi * d, d);
    target_logit_grads(wy, xi, m, df_dx, df_dw);

    for (std::size_t j = 0; j < k; ++j) {
      const double g = (s.probs[i * k + j] - (j == yi ? 1.0 : 0.0)) * inv_n;
      std::span<const double> wj(W.data() + j * d, d);
      if (j == yi && m > 1) {
        for (std::size_t t = 0; t < d; ++t) {
          const double dfx = blend * (lambda * wj[t] + df_dx[t]);
          const double dfw = blend * (lambda * xi[t] + df_dw[t]);
          result.grad_x.at(i, t) += g * dfx;
          result.grad_w.at(j, t) += g * dfw;
        }
      } else {
        // m = 1 target rows reduce to the plain softmax gradient exactly
        for (std::size_t t = 0; t < d; ++t) {
          result.grad_x.at(i, t) += g * wj[t];
          result.grad_w.at(j, t) += g * xi[t];
        }
      }
    }
  }
  return result;
}

}  // namespace lmsx

#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace lmsx {

struct GradCheckReport {
  double max_relative_error = 0.0;  // |a-n| / max(|a|, |n|, 1e-12), worst coordinate
  std::size_t worst_coordinate = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  double h = 0.0;
  // |a-n| scaled by the gradient's largest coordinate instead of its own.
  // Central differences carry an absolute noise floor around eps*|f|/h, so
  // coordinates far below the gradient's scale fail the per-coordinate ratio
  // even when the analytic gradient is exact; this is the metric to gate on.
  double max_scaled_error = 0.0;
  std::size_t worst_scaled_coordinate = 0;
};

// Central-difference check of a claimed gradient at one point.
// Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-12).
// Throws NonFiniteFunctionError if any probe evaluates to NaN/Inf.
GradCheckReport gradcheck(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> claimed_gradient,
                          std::span<const double> point, double h = 1e-6);

}  // namespace lmsx

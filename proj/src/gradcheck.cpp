#include "lmsx/gradcheck.hpp"

#include <cmath>
#include <vector>

#include "lmsx/errors.hpp"

namespace lmsx {

GradCheckReport gradcheck(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> claimed_gradient,
                          std::span<const double> point, double h) {
  if (claimed_gradient.size() != point.size()) {
    throw ShapeMismatchError("gradcheck: gradient length " +
                             std::to_string(claimed_gradient.size()) +
                             " != point length " + std::to_string(point.size()));
  }
  GradCheckReport report;
  report.h = h;

  std::vector<double> numeric(point.size());
  std::vector<double> probe(point.begin(), point.end());
  double grad_scale = 1e-12;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double fp = f(probe);
    probe[i] = saved - h;
    const double fm = f(probe);
    probe[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NonFiniteFunctionError("gradcheck: non-finite probe at coordinate " +
                                   std::to_string(i));
    }
    numeric[i] = (fp - fm) / (2.0 * h);
    grad_scale = std::max({grad_scale, std::fabs(claimed_gradient[i]), std::fabs(numeric[i])});
  }
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double analytic = claimed_gradient[i];
    const double diff = std::fabs(analytic - numeric[i]);
    const double scale = std::max({std::fabs(analytic), std::fabs(numeric[i]), 1e-12});
    const double rel = diff / scale;
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_coordinate = i;
      report.analytic_at_worst = analytic;
      report.numeric_at_worst = numeric[i];
    }
    const double scaled = diff / grad_scale;
    if (scaled > report.max_scaled_error) {
      report.max_scaled_error = scaled;
      report.worst_scaled_coordinate = i;
    }
  }
  return report;
}

}  // namespace lmsx

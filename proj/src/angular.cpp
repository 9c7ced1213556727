#include "lmsx/angular.hpp"

#include <cmath>
#include <stdexcept>

namespace lmsx::angular {
namespace {

void require_margin(int m) {
  if (m < 1) throw std::invalid_argument("margin m must be >= 1");
}

double int_pow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// C(m, j) as a double; exact for the small m used here.
double binomial(int m, int j) {
  double r = 1.0;
  for (int i = 1; i <= j; ++i) r = r * static_cast<double>(m - j + i) / static_cast<double>(i);
  return r;
}

}  // namespace

double clamp_cosine(double c) {
  if (c > 1.0) return 1.0;
  if (c < -1.0) return -1.0;
  return c;
}

int segment_of(double c, int m) {
  require_margin(m);
  c = clamp_cosine(c);
  // Count boundaries cos(b*pi/m) at or above c; ties at a boundary land on
  // the larger-k side, matching the "<=" condition of the m = 2 lookup rule.
  int k = 0;
  for (int b = 1; b < m; ++b) {
    if (c <= std::cos(static_cast<double>(b) * kPi / static_cast<double>(m))) ++k;
  }
  return k;
}

double cos_multiple(double c, int m) {
  require_margin(m);
  c = clamp_cosine(c);
  const double s2 = 1.0 - c * c;  // sin^2(theta)
  double sum = 0.0;
  for (int n = 0; 2 * n <= m; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    sum += sign * binomial(m, 2 * n) * int_pow(c, m - 2 * n) * int_pow(s2, n);
  }
  return sum;
}

double cos_multiple_derivative(double c, int m) {
  require_margin(m);
  c = clamp_cosine(c);
  const double s2 = 1.0 - c * c;
  double sum = 0.0;
  for (int n = 0; 2 * n <= m; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    const double coeff = sign * binomial(m, 2 * n);
    const int p = m - 2 * n;
    if (p > 0) sum += coeff * static_cast<double>(p) * int_pow(c, p - 1) * int_pow(s2, n);
    if (n > 0) sum -= coeff * 2.0 * static_cast<double>(n) * c * int_pow(c, p) * int_pow(s2, n - 1);
  }
  return sum;
}

double psi_in_segment(double c, int k, int m) {
  require_margin(m);
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * cos_multiple(c, m) - 2.0 * static_cast<double>(k);
}

double psi(double c, int m) {
  return psi_in_segment(clamp_cosine(c), segment_of(c, m), m);
}

double psi_derivative(double c, int m) {
  c = clamp_cosine(c);
  const int k = segment_of(c, m);
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * cos_multiple_derivative(c, m);
}

}  // namespace lmsx::angular

#pragma once

namespace lmsx::angular {

inline constexpr double kPi = 3.14159265358979323846;

/// Clamps a cosine value into [-1, 1], absorbing dot-product rounding noise.
double clamp_cosine(double c);

// Index k of the angular segment [k*pi/m, (k+1)*pi/m] containing acos(c).
// A cosine exactly on a boundary cos(k*pi/m), k >= 1, belongs to segment k.
int segment_of(double c, int m);

// cos(m*acos(c)) evaluated through the binomial expansion
//   sum_n (-1)^n C(m,2n) c^(m-2n) (1-c^2)^n,
// a polynomial in c; never calls acos.
double cos_multiple(double c, int m);

/// d cos(m*acos(c)) / dc, by term-wise differentiation of the expansion.
double cos_multiple_derivative(double c, int m);

// psi(acos(c)) = (-1)^k cos(m*acos(c)) - 2k with k = segment_of(c, m).
// Continuous, decreasing in theta; equals c when m = 1.
double psi(double c, int m);

/// psi evaluated with a forced segment index (boundary analysis helper).
double psi_in_segment(double c, int k, int m);

/// d psi / dc on the segment chosen by segment_of; one-sided at boundaries.
double psi_derivative(double c, int m);

}  // namespace lmsx::angular

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "lmsx/angular.hpp"

using namespace lmsx::angular;

namespace {

// Oracle: evaluate psi through acos/cos directly, never via the expansion.
double oracle_psi(double theta, int m) {
  int k = static_cast<int>(theta * m / kPi);
  if (k > m - 1) k = m - 1;
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * std::cos(m * theta) - 2.0 * k;
}

double oracle_cos_multiple(double c, int m) { return std::cos(m * std::acos(c)); }

// d cos(m theta) / d cos(theta) = m sin(m theta) / sin(theta)
double oracle_cos_multiple_derivative(double c, int m) {
  const double theta = std::acos(c);
  return m * std::sin(m * theta) / std::sin(theta);
}

}  // namespace

TEST_SUITE_BEGIN("angular");

TEST_CASE("segment lookup matches the m=2 rule and the general formula") {
  CHECK(segment_of(0.7, 2) == 0);
  CHECK(segment_of(-0.3, 2) == 1);
  // theta = 0.9 lies in (pi/4, pi/2) so m=4 gives k = 1
  CHECK(segment_of(std::cos(0.9), 4) == 1);
  CHECK(segment_of(-1.0, 3) == 2);
  CHECK(segment_of(1.0, 4) == 0);
  CHECK(segment_of(1.0, 1) == 0);
  CHECK(segment_of(-1.0, 1) == 0);
}

TEST_CASE("boundary cosines land on the larger-k segment") {
  CHECK(segment_of(0.0, 2) == 1);  // c = cos(pi/2) exactly
  for (int m = 2; m <= 6; ++m) {
    for (int k = 1; k < m; ++k) {
      const double boundary = std::cos(k * kPi / m);
      CHECK(segment_of(boundary, m) == k);
    }
  }
}

TEST_CASE("out-of-range cosines are clamped, not rejected") {
  CHECK(segment_of(1.0 + 1e-12, 3) == 0);
  CHECK(segment_of(-1.0 - 1e-12, 3) == 2);
  CHECK(psi(1.0 + 1e-9, 4) == doctest::Approx(1.0));
}

TEST_CASE("segment postcondition holds on random inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int m : {1, 2, 3, 4, 6}) {
    for (int trial = 0; trial < 500; ++trial) {
      const double c = dist(rng);
      const int k = segment_of(c, m);
      CHECK(k >= 0);
      CHECK(k <= m - 1);
      CHECK(c >= std::cos((k + 1) * kPi / m) - 1e-15);
      CHECK(c <= std::cos(k * kPi / m) + 1e-15);
    }
  }
}

TEST_CASE("psi fixed values") {
  CHECK(psi(1.0, 4) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(psi(0.0, 2) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(psi(-1.0, 2) == doctest::Approx(-3.0).epsilon(1e-12));
  // oracle: (-1)^k cos(2 acos(0.5)) - 2k with acos(0.5) in segment 0
  CHECK(psi(0.5, 2) == doctest::Approx(oracle_psi(std::acos(0.5), 2)).epsilon(1e-12));
  CHECK(psi(0.5, 2) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("psi reduces to the identity for m=1") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double c = dist(rng);
    CHECK(psi(c, 1) == c);  // exact
  }
  CHECK(psi(1.0, 1) == 1.0);
  CHECK(psi(-1.0, 1) == -1.0);
}

TEST_CASE("psi range endpoints for every m") {
  for (int m = 1; m <= 6; ++m) {
    CHECK(psi(1.0, m) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(psi(-1.0, m) == doctest::Approx(-(2.0 * m - 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("cos_multiple fixed values") {
  CHECK(cos_multiple(0.6, 2) == doctest::Approx(-0.28).epsilon(1e-12));
  CHECK(cos_multiple(1.0, 3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cos_multiple(0.5, 3) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(cos_multiple(0.0, 4) == doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double c = dist(rng);
    CHECK(cos_multiple(c, 1) == c);
  }
}

TEST_CASE("expansion agrees with cos(m*acos(c)) to 1e-9") {
  for (int m : {1, 2, 3, 4, 6}) {
    for (int i = 0; i < 10000; ++i) {
      const double c = -1.0 + 1e-6 + (2.0 - 2e-6) * i / 9999.0;
      CHECK(std::fabs(cos_multiple(c, m) - oracle_cos_multiple(c, m)) <= 1e-9);
    }
  }
}

TEST_CASE("cos_multiple_derivative fixed values") {
  CHECK(cos_multiple_derivative(0.6, 2) == doctest::Approx(2.4).epsilon(1e-12));
  CHECK(cos_multiple_derivative(0.5, 3) == doctest::Approx(0.0).epsilon(1e-12));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    CHECK(cos_multiple_derivative(dist(rng), 1) == 1.0);
  }
}

TEST_CASE("cos_multiple_derivative matches the Chebyshev identity") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-0.999, 0.999);
  for (int m : {2, 3, 4, 6}) {
    for (int trial = 0; trial < 500; ++trial) {
      const double c = dist(rng);
      const double expected = oracle_cos_multiple_derivative(c, m);
      CHECK(cos_multiple_derivative(c, m) ==
            doctest::Approx(expected).epsilon(1e-8));
    }
  }
}

TEST_CASE("derivative is defined at the clamped endpoints") {
  // polynomial limit: d cos(m acos c)/dc at c = 1 is m^2, at c = -1 is (-1)^(m+1) m^2
  for (int m = 1; m <= 4; ++m) {
    CHECK(cos_multiple_derivative(1.0, m) ==
          doctest::Approx(static_cast<double>(m) * m).epsilon(1e-12));
    const double sign = (m % 2 == 0) ? -1.0 : 1.0;
    CHECK(cos_multiple_derivative(-1.0, m) ==
          doctest::Approx(sign * m * m).epsilon(1e-12));
  }
}

TEST_CASE("psi_derivative fixed values and sign flip across segments") {
  CHECK(psi_derivative(0.6, 2) == doctest::Approx(2.4).epsilon(1e-12));
  CHECK(psi_derivative(-0.6, 2) == doctest::Approx(2.4).epsilon(1e-12));
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    CHECK(psi_derivative(dist(rng), 1) == 1.0);
  }
}

TEST_CASE("psi_derivative is nonnegative everywhere") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int m : {1, 2, 3, 4, 6}) {
    for (int trial = 0; trial < 2000; ++trial) {
      CHECK(psi_derivative(dist(rng), m) >= -1e-12);
    }
  }
}

TEST_CASE("psi_derivative matches central differences of psi inside segments") {
  const double h = 1e-6;
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (int m : {1, 2, 3, 4}) {
    for (int k = 0; k < m; ++k) {
      const double hi = std::cos(k * kPi / m);
      const double lo = std::cos((k + 1) * kPi / m);
      for (int trial = 0; trial < 1000; ++trial) {
        // stay well inside the segment so both probes share the branch
        const double margin_gap = 1e-3 * (hi - lo);
        const double c = lo + margin_gap + (hi - lo - 2 * margin_gap) * uniform(rng);
        const double numeric = (lmsx::angular::psi(c + h, m) - lmsx::angular::psi(c - h, m)) / (2 * h);
        const double analytic = psi_derivative(c, m);
        const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1.0});
        CHECK(std::fabs(analytic - numeric) / scale <= 1e-5);
      }
    }
  }
}

TEST_CASE("psi is continuous at segment boundaries, value 1-2k") {
  for (int m : {2, 3, 4, 6}) {
    for (int k = 1; k < m; ++k) {
      const double boundary = std::cos(k * kPi / m);
      const double expected = 1.0 - 2.0 * k;
      CHECK(std::fabs(psi_in_segment(boundary, k, m) - expected) <= 1e-9);
      CHECK(std::fabs(psi_in_segment(boundary, k - 1, m) - expected) <= 1e-9);
      CHECK(std::fabs(psi(boundary, m) - expected) <= 1e-9);
    }
  }
}

TEST_CASE("psi(cos theta) is non-increasing in theta") {
  constexpr int kGrid = 100000;
  for (int m : {1, 2, 3, 4}) {
    double previous = psi(std::cos(0.0), m);
    for (int i = 1; i < kGrid; ++i) {
      const double theta = kPi * i / (kGrid - 1);
      const double value = psi(std::cos(theta), m);
      CHECK(value <= previous + 1e-12);
      previous = value;
    }
  }
}

TEST_CASE("margin inequality: cos(m theta) <= cos(theta) on [0, pi/m]") {
  for (int m : {2, 3, 4, 6}) {
    for (int i = 0; i <= 2000; ++i) {
      const double theta = (kPi / m) * i / 2000.0;
      const double lhs = cos_multiple(std::cos(theta), m);
      CHECK(lhs <= std::cos(theta) + 1e-12);
      if (theta > 1e-3) CHECK(lhs < std::cos(theta));
    }
  }
}

TEST_CASE("psi(cos theta) <= cos theta on all of [0, pi]") {
  for (int m : {1, 2, 3, 4, 6}) {
    for (int i = 0; i <= 20000; ++i) {
      const double theta = kPi * i / 20000.0;
      CHECK(psi(std::cos(theta), m) <= std::cos(theta) + 1e-12);
    }
  }
}

TEST_CASE("psi agrees with the acos-path oracle everywhere") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(0.0, kPi);
  for (int m : {1, 2, 3, 4, 6}) {
    for (int trial = 0; trial < 2000; ++trial) {
      const double theta = dist(rng);
      CHECK(psi(std::cos(theta), m) ==
            doctest::Approx(oracle_psi(theta, m)).epsilon(1e-9));
    }
  }
}

TEST_CASE("invalid margins are rejected") {
  CHECK_THROWS_AS(psi(0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(cos_multiple(0.5, -2), std::invalid_argument);
}

TEST_SUITE_END();

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace sbem {

// P_n(z) and P_n'(z) by the three-term recurrence
template <typename Scalar>
std::pair<Scalar, Scalar> legendre(int n, Scalar z) {
  Scalar p0 = 1, p1 = z;
  if (n == 0) return {Scalar(1), Scalar(0)};
  for (int k = 2; k <= n; ++k) {
    Scalar pk = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return {p1, n * (z * p1 - p0) / (z * z - 1)};
}

// Legendre roots by Newton iteration from Chebyshev-like guesses; nodes ascending on [-1,1]
template <typename Scalar = double>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>
gauss_legendre_1d(int n) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vec x(n), w(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar z = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    for (int it = 0; it < 100; ++it) {
      auto [pn, dp] = legendre(n, z);
      Scalar dz = pn / dp;
      z -= dz;
      if (std::abs(dz) <= 2 * eps) break;
    }
    auto [pn, dp] = legendre(n, z);
    Scalar wi = 2 / ((1 - z * z) * dp * dp);
    x(i) = -z;
    x(n - 1 - i) = z;
    w(i) = w(n - 1 - i) = wi;
  }
  if (n % 2 == 1) x(n / 2) = 0;
  return {x, w};
}

}  // namespace sbem

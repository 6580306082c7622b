#pragma once

#include <cmath>
#include <numbers>

#include "texrand/error.hpp"

namespace texrand {

// Inverse error function on (-1, 1).
//
// Initial guess from M. Giles' single-precision polynomial approximation
// ("Approximating the erfinv function", GPU Computing Gems, 2010), refined by
// Halley steps on f(z) = erf(z) - x. Since f'' = -2 z f', a Halley step is
// z -= f / (f' + z f).
inline double erf_inv(double x) {
  detail::require(std::isfinite(x) && std::fabs(x) < 1.0, ErrorKind::domain, "erf_inv: argument must lie in (-1, 1)");
  if (x == 0.0) return 0.0;

  double w = -std::log((1.0 - x) * (1.0 + x));
  double p;
  if (w < 5.0) {
    w -= 2.5;
    p = 2.81022636e-08;
    p = 3.43273939e-07 + p * w;
    p = -3.5233877e-06 + p * w;
    p = -4.39150654e-06 + p * w;
    p = 0.00021858087 + p * w;
    p = -0.00125372503 + p * w;
    p = -0.00417768164 + p * w;
    p = 0.246640727 + p * w;
    p = 1.50140941 + p * w;
  } else {
    w = std::sqrt(w) - 3.0;
    p = -0.000200214257;
    p = 0.000100950558 + p * w;
    p = 0.00134934322 + p * w;
    p = -0.00367342844 + p * w;
    p = 0.00573950773 + p * w;
    p = -0.0076224613 + p * w;
    p = 0.00943887047 + p * w;
    p = 1.00167406 + p * w;
    p = 2.83297682 + p * w;
  }
  double z = p * x;

  const double two_over_sqrt_pi = 2.0 * std::numbers::inv_sqrtpi;
  for (int i = 0; i < 4; ++i) {
    const double f = std::erf(z) - x;
    const double fp = two_over_sqrt_pi * std::exp(-z * z);
    const double step = f / (fp + z * f);
    z -= step;
    if (std::fabs(step) <= 1e-16 * std::fabs(z)) break;
  }
  return z;
}

}  // namespace texrand

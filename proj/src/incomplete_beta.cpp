#include "lifelong/incomplete_beta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lifelong {

namespace {

constexpr double kTolerance = 1e-12;
constexpr int kMaxIterations = 10000;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a,b) / prefactor (Numerical Recipes form,
// modified Lentz).
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kTolerance) return h;
  }
  throw NumericalError("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a >= 0.0) || !(b >= 0.0) || (a == 0.0 && b == 0.0) || std::isnan(x)) {
    throw NumericalError("regularized_incomplete_beta: invalid parameters");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (a == 0.0) return 1.0;
  if (b == 0.0) return 0.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  double result;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    result = front * beta_fraction(a, b, x) / a;
  } else {
    result = 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
  }
  if (!std::isfinite(result)) {
    throw NumericalError("regularized_incomplete_beta: non-finite result");
  }
  return std::clamp(result, 0.0, 1.0);
}

double beta_interval_mass(double a, double b, double lo, double hi) {
  if (hi < lo) return 0.0;
  if (a == 0.0) return (lo <= 0.0 && 0.0 <= hi) ? 1.0 : 0.0;
  if (b == 0.0) return (lo <= 1.0 && 1.0 <= hi) ? 1.0 : 0.0;
  const double mass =
      regularized_incomplete_beta(a, b, hi) - regularized_incomplete_beta(a, b, lo);
  return std::max(0.0, mass);
}

}  // namespace lifelong

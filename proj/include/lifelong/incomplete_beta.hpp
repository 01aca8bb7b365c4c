#pragma once

#include <stdexcept>

namespace lifelong {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction,
/// relative tolerance 1e-12. a == 0 (b > 0) is the point mass at 0 and
/// b == 0 (a > 0) the point mass at 1. Throws NumericalError if the fraction
/// fails to converge.
double regularized_incomplete_beta(double a, double b, double x);

/// P(lo <= X <= hi) for X ~ Beta(a, b), with the same degenerate cases.
double beta_interval_mass(double a, double b, double lo, double hi);

}  // namespace lifelong

#pragma once

#include <span>

namespace hedgebench::harness {

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// Student-t cumulative distribution with (possibly fractional) df > 0.
double student_t_cdf(double t, double df);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_value = 0.5;
};

/// One-sided Welch test of H1: mean(a) < mean(b), unequal variances,
/// Welch-Satterthwaite degrees of freedom. Both samples need n >= 2. When
/// both variances vanish, p is 0.5 for equal means and 0 or 1 otherwise.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);
double welch_t_test_one_sided(std::span<const double> a, std::span<const double> b);

}  // namespace hedgebench::harness

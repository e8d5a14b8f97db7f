#pragma once

#include <cmath>

namespace gxe {

// Upper tail of the standard normal, accurate far into the tail.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Two-sided p-value for a z statistic.
inline double two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

// Upper tail of the chi-square distribution with 1 degree of freedom.
inline double chisq1_sf(double x) {
    if (x <= 0.0) return 1.0;
    return std::erfc(std::sqrt(0.5 * x));
}

// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) {
    if (x > 35.0) return x;
    if (x < -700.0) return 0.0;
    return std::log1p(std::exp(x));
}

// log(exp(a) + exp(b)); tolerates -inf arguments.
inline double logaddexp(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    if (a < b) std::swap(a, b);
    return a + log1pexp(b - a);
}

// 1 / (1 + exp(-x)), stable on both sides.
inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace gxe

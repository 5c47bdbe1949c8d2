#pragma once

#include <cmath>

namespace surfmeas {

// Gamma is delegated to the C library (correctly rounded to a few ulp on
// glibc); everything downstream works with ratios of these values.
inline double gamma_fn(double x) { return std::tgamma(x); }
inline double log_gamma_fn(double x) { return std::lgamma(x); }

/// x^k for a small non-negative integer k.
inline double ipow(double x, int k) {
    double r = 1.0;
    while (k > 0) {
        if (k & 1) r *= x;
        x *= x;
        k >>= 1;
    }
    return r;
}

}  // namespace surfmeas

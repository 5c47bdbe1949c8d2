#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace surfmeas {

/// Monte Carlo estimate of an expectation.
struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n_samples)
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;

    /// |value| <= k * std_error
    bool within(double k) const { return std::abs(value) <= k * std_error; }
};

/// Running mean and centred sum of squares; partial results merge exactly
/// (Chan et al.) so block-wise reductions can be combined in a fixed order.
struct MeanAccumulator {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }

    void merge(const MeanAccumulator& other) {
        if (other.n == 0) return;
        if (n == 0) {
            *this = other;
            return;
        }
        const double total = static_cast<double>(n + other.n);
        const double delta = other.mean - mean;
        mean += delta * static_cast<double>(other.n) / total;
        m2 += other.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(other.n) / total;
        n += other.n;
    }

    McEstimate estimate(std::uint64_t seed) const {
        McEstimate e;
        e.value = mean;
        e.n_samples = n;
        e.seed = seed;
        if (n >= 2) e.std_error = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
        return e;
    }
};

/// Standard error of a difference of two independent estimates.
inline double combined_se(const McEstimate& a, const McEstimate& b) {
    return std::hypot(a.std_error, b.std_error);
}

}  // namespace surfmeas

#pragma once

#include <functional>
#include <vector>

namespace surfmeas::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule with `n` points on [-1, 1].
Rule gauss_legendre(int n);

/// Gauss-Legendre rule mapped to [a, b].
Rule gauss_legendre(int n, double a, double b);

/// Adaptive Gauss-Kronrod over the whole real line, split at `split`.
double integrate_real_line(const std::function<double(double)>& f, double rel_tol = 1e-13,
                           double split = 0.0);

/// Adaptive Gauss-Kronrod over [a, b]; either end may be infinite.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-13);

/// Composite Gauss-Legendre on [a, b]: `panels` equal panels of `order` points.
Rule composite(int panels, int order, double a, double b);

}  // namespace surfmeas::quad

#include "surfmeas/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace surfmeas::quad {

Rule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    if (n == 1) return Rule{{0.0}, {2.0}};
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

Rule gauss_legendre(int n, double a, double b) {
    Rule rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

Rule composite(int panels, int order, double a, double b) {
    Rule out;
    const Rule base = gauss_legendre(order);
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        for (int i = 0; i < order; ++i) {
            out.nodes.push_back(lo + 0.5 * width * (base.nodes[i] + 1.0));
            out.weights.push_back(0.5 * width * base.weights[i]);
        }
    }
    return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate(f, a, b, 25, rel_tol);
}

double integrate_real_line(const std::function<double(double)>& f, double rel_tol, double split) {
    const double inf = std::numeric_limits<double>::infinity();
    return integrate(f, -inf, split, rel_tol) + integrate(f, split, inf, rel_tol);
}

}  // namespace surfmeas::quad

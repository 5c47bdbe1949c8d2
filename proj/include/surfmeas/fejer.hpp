#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace surfmeas {

/// A scalar function of one variable with derivatives of every order.
struct Univariate {
    std::string id;
    std::function<double(double x, int order)> eval;
};

namespace uni {
Univariate constant(double c);
/// a x + b
Univariate linear(double a, double b);
/// cos(w x + p)
Univariate cosine(double w, double p = 0.0);
/// exp(-x^2 / (2 s^2))
Univariate gaussian(double s);
/// exp(sin(w x)), derivatives by Faa di Bruno on the fly.
Univariate exp_sin(double w);
Univariate product(const Univariate& f, const Univariate& g);
}  // namespace uni

/// Finite sum of separable products sum_t c_t prod_j f_{t,j}(x_j), evaluated
/// with any mixed partial derivative D^alpha.
struct SmoothFunction {
    struct Term {
        double coefficient = 1.0;
        std::vector<Univariate> factors;  // one per variable
    };
    std::string id;
    std::size_t n_vars = 0;
    std::vector<Term> terms;

    double derivative(std::span<const double> x, std::span<const int> alpha) const;
    double value(std::span<const double> x) const;
};

SmoothFunction separable(std::string id, std::vector<Univariate> factors, double coefficient = 1.0);
SmoothFunction sum(std::string id, const SmoothFunction& f, const SmoothFunction& g);

/// Univariate Fejer kernel (1/(N+1)) (sin(pi (N+1) y / T) / sin(pi y / T))^2 / T.
double fejer_kernel_1d(int N, double T, double y);
/// Product of the univariate kernels over the coordinates of y.
double fejer_kernel(int N, double T, std::span<const double> y);
/// Triangular multiplier max(0, 1 - |k| / (N + 1)).
double fejer_multiplier(int N, long k);

/// Real trigonometric polynomial sum_k c_k exp(2 pi i <k, x> / T), |k_j| <= degree,
/// coefficients stored densely with k_1 varying slowest.
class TrigPolynomial {
public:
    TrigPolynomial(std::size_t n_vars, double period, int degree);

    std::size_t n_vars() const { return n_vars_; }
    double period() const { return period_; }
    int degree() const { return degree_; }
    std::size_t size() const { return coeffs_.size(); }

    std::complex<double>& coefficient(std::span<const int> k);
    std::complex<double> coefficient(std::span<const int> k) const;
    const std::vector<std::complex<double>>& coefficients() const { return coeffs_; }

    double derivative(std::span<const double> x, std::span<const int> alpha) const;
    double value(std::span<const double> x) const;

    /// Largest |c_k - conj(c_{-k})|.
    double asymmetry() const;

    nlohmann::json to_json() const;
    static TrigPolynomial from_json(const nlohmann::json& j);

private:
    std::size_t index(std::span<const int> k) const;

    std::size_t n_vars_;
    double period_;
    int degree_;
    std::vector<std::complex<double>> coeffs_;
};

/// Samples of a T-periodic function at origin + j T / M in every variable,
/// j = 0..M-1, stored with the first variable slowest.
struct PeriodicGrid {
    std::size_t n_vars = 1;
    double period = 1.0;
    double origin = 0.0;
    std::size_t points = 0;
    std::vector<double> values;
};

PeriodicGrid sample_grid(const std::function<double(std::span<const double>)>& f, std::size_t n_vars, double period,
                         double origin, std::size_t points);

/// Fejer mean of degree N of the sampled function. Needs points >= 2N + 2.
TrigPolynomial fejer_approximate(const PeriodicGrid& grid, int N);
/// Fejer mean of degree N of a trigonometric polynomial (coefficients beyond N dropped).
TrigPolynomial fejer_approximate(const TrigPolynomial& p, int N);

/// Cutoff theta_k: 1 on |t| <= (k-1)/2, 0 for |t| >= k/2, joined by the
/// smoothstep of degree 2h+1 on the band of width 1/2.
class Cutoff {
public:
    Cutoff(int k, int h);
    int k() const { return k_; }
    int h() const { return h_; }
    double eval(double t, int order) const;
    /// sup |theta^{(j)}|, the same for every k.
    double sup_derivative(int j) const { return sup_[static_cast<std::size_t>(j)]; }

private:
    int k_;
    int h_;
    std::vector<std::vector<double>> poly_;  // coefficients of S^{(j)}, j = 0..h
    std::vector<double> sup_;
};

/// k-periodic function equal to phi * prod_j theta_k(x_j) on the cell [-k/2, k/2)^n.
struct PeriodicFunction {
    std::size_t n_vars = 1;
    double period = 1.0;
    std::function<double(std::span<const double>, std::span<const int>)> derivative;
    double value(std::span<const double> x) const;
};

PeriodicFunction periodize(const SmoothFunction& phi, int k, int h);

/// Constant C_alpha with sup |D^alpha periodize(phi)| <= C_alpha max_{beta <= alpha} sup_cell |D^beta phi|:
/// prod_j sum_{i <= alpha_j} binom(alpha_j, i) sup |theta^{(i)}|.
double derivative_constant(const Cutoff& cutoff, std::span<const int> alpha);

struct DerivativeBound {
    std::vector<int> alpha;
    double constant = 0.0;
    double phi_norm = 0.0;    // max_{beta <= alpha} sup over the cell of |D^beta phi| (grid estimate)
    double approx_sup = 0.0;  // sup over the check grid of |D^alpha phi_k|
    bool pass = false;
};

struct ApproxEntry {
    int k = 0;
    int degree = 0;
    std::vector<double> max_error;  // by derivative order 0..h, over the probes
    std::vector<DerivativeBound> bounds;
};

struct ApproxReport {
    std::string phi_id;
    int h = 0;
    std::vector<ApproxEntry> entries;
    bool errors_decreasing = false;
    bool bounds_hold = false;
};

/// For each k: phi_k = Fejer mean of degree degree_for_k(k) of periodize(phi, k),
/// errors of D^alpha phi_k against D^alpha phi for |alpha| <= h at probes in
/// [-1, 1]^n, and the derivative bounds on a grid over the cell.
ApproxReport approx_report(const SmoothFunction& phi, int h, const std::vector<int>& k_list,
                           std::function<int(int)> degree_for_k = nullptr, std::size_t probes_per_axis = 9);

}  // namespace surfmeas

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "surfmeas/rng.hpp"

namespace surfmeas {

/// a_m, the normalisation constant of exp(-|xi|^{2m} / (2m mu)) mu^{-1/(2m)}.
double normalization_constant(int m);

/// b_{m,N} = (2m)^{N/m} Gamma((2N+1)/(2m)) / Gamma(1/(2m)).
double moment_coefficient(int m, double N);

/// The 2N-th absolute moment b_{m,N} mu^{N/m} of the one-dimensional law.
double moment(int m, double mu, double N);

/// The one-dimensional law with density a_m mu^{-1/(2m)} exp(-|xi|^{2m}/(2m mu)).
/// For m = 1 it is the centred Gaussian with variance mu.
class OneDimLaw {
public:
    OneDimLaw(int m, double mu);

    int m() const { return m_; }
    double mu() const { return mu_; }
    double density(double xi) const;
    double log_density(double xi) const;
    double variance() const { return moment(m_, mu_, 1.0); }

    /// Exact draw: sign * T^{1/(2m)} with T ~ Gamma(1/(2m), scale 2 m mu).
    double sample(RandomStream& rng) const;

private:
    int m_;
    double mu_;
    double prefactor_;  // a_m mu^{-1/(2m)}
};

inline double density(const OneDimLaw& law, double xi) { return law.density(xi); }
inline double sample_one(const OneDimLaw& law, RandomStream& rng) { return law.sample(rng); }

/// Truncated product of n one-dimensional laws sharing the exponent m.
class ProductLaw {
public:
    ProductLaw(int m, std::vector<double> weights);

    /// mu_h = c * h^{-s}, h = 1..n.
    static ProductLaw power_weights(int m, std::size_t n, double c, double s);

    int m() const { return m_; }
    std::size_t dim() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    double weight(std::size_t h) const { return weights_[h]; }
    /// Lambda_m = sum_h mu_h^{1/m} over the truncation.
    double lambda() const { return lambda_; }
    OneDimLaw coordinate(std::size_t h) const { return OneDimLaw(m_, weights_[h]); }
    double log_density(std::span<const double> x) const;

private:
    int m_;
    std::vector<double> weights_;
    double lambda_;
};

/// Diagonal of the covariance: b_{m,1} mu_h^{1/m}.
std::vector<double> covariance_diag(const ProductLaw& law);

}  // namespace surfmeas

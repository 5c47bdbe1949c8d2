#include "surfmeas/measure.hpp"

#include <cmath>

#include "surfmeas/errors.hpp"
#include "surfmeas/special.hpp"

namespace surfmeas {

double normalization_constant(int m) {
    if (m < 1) throw PreconditionError("exponent m must be >= 1");
    const double two_m = 2.0 * m;
    return std::pow(two_m, 1.0 - 1.0 / two_m) / (2.0 * gamma_fn(1.0 / two_m));
}

double moment_coefficient(int m, double N) {
    if (m < 1) throw PreconditionError("exponent m must be >= 1");
    if (!(N >= 0.0)) throw PreconditionError("moment order N must be >= 0");
    const double two_m = 2.0 * m;
    return std::exp((N / m) * std::log(two_m) + log_gamma_fn((2.0 * N + 1.0) / two_m) -
                    log_gamma_fn(1.0 / two_m));
}

double moment(int m, double mu, double N) {
    if (!(mu > 0.0)) throw PreconditionError("scale mu must be > 0");
    return moment_coefficient(m, N) * std::pow(mu, N / m);
}

OneDimLaw::OneDimLaw(int m, double mu) : m_(m), mu_(mu) {
    if (m < 1) throw PreconditionError("exponent m must be >= 1");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw PreconditionError("scale mu must be finite and > 0");
    prefactor_ = normalization_constant(m) * std::pow(mu, -1.0 / (2.0 * m));
}

double OneDimLaw::density(double xi) const {
    return prefactor_ * std::exp(-ipow(xi * xi, m_) / (2.0 * m_ * mu_));
}

double OneDimLaw::log_density(double xi) const {
    return std::log(prefactor_) - ipow(xi * xi, m_) / (2.0 * m_ * mu_);
}

double OneDimLaw::sample(RandomStream& rng) const {
    const double shape = 1.0 / (2.0 * m_);
    const double t = rng.gamma(shape, 2.0 * m_ * mu_);
    const double magnitude = m_ == 1 ? std::sqrt(t) : std::pow(t, shape);
    return rng.coin() ? magnitude : -magnitude;
}

ProductLaw::ProductLaw(int m, std::vector<double> weights) : m_(m), weights_(std::move(weights)), lambda_(0.0) {
    if (m < 1) throw PreconditionError("exponent m must be >= 1");
    if (weights_.empty()) throw PreconditionError("product law needs at least one coordinate");
    for (double mu : weights_) {
        if (!(mu > 0.0) || !std::isfinite(mu)) throw PreconditionError("every weight mu_h must be finite and > 0");
        lambda_ += std::pow(mu, 1.0 / m);
    }
}

ProductLaw ProductLaw::power_weights(int m, std::size_t n, double c, double s) {
    if (n == 0) throw PreconditionError("truncation dimension must be >= 1");
    if (!(c > 0.0)) throw PreconditionError("weight scale c must be > 0");
    std::vector<double> w(n);
    for (std::size_t h = 0; h < n; ++h) w[h] = c * std::pow(static_cast<double>(h + 1), -s);
    return ProductLaw(m, std::move(w));
}

double ProductLaw::log_density(std::span<const double> x) const {
    if (x.size() != dim()) throw DimensionMismatch("log_density: point dimension differs from law dimension");
    double total = 0.0;
    for (std::size_t h = 0; h < dim(); ++h) total += coordinate(h).log_density(x[h]);
    return total;
}

std::vector<double> covariance_diag(const ProductLaw& law) {
    const double b1 = moment_coefficient(law.m(), 1.0);
    std::vector<double> out(law.dim());
    for (std::size_t h = 0; h < law.dim(); ++h) out[h] = b1 * std::pow(law.weight(h), 1.0 / law.m());
    return out;
}

}  // namespace surfmeas

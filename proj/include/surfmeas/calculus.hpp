#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "surfmeas/estimate.hpp"
#include "surfmeas/measure.hpp"
#include "surfmeas/sampler.hpp"

namespace surfmeas {

using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

/// A smooth test function of finitely many coordinates, with analytic
/// gradient and (optionally) the diagonal of its Hessian.
struct CylFunction {
    std::string id;
    std::size_t dim = 0;
    std::function<double(ConstSpan)> value;
    std::function<void(ConstSpan, MutSpan)> grad;
    std::function<void(ConstSpan, MutSpan)> hess_diag;  // may be empty
    bool bounded = false;
};

namespace cyl {
CylFunction constant(std::size_t dim, double c);
CylFunction coordinate(std::size_t dim, std::size_t h);
CylFunction sin_linear(std::vector<double> a, std::string id = "sin_linear");
CylFunction cos_linear(std::vector<double> a, std::string id = "cos_linear");
/// |x|^2 / (1 + |x|^2)
CylFunction norm2_saturated(std::size_t dim);
/// exp(-|x - center|^2 / (2 width^2)), a smooth bump.
CylFunction gaussian_bump(std::vector<double> center, double width);
CylFunction product(const CylFunction& f, const CylFunction& g);
CylFunction linear_combination(double a, const CylFunction& f, double b, const CylFunction& g);
/// outer(f(x)) for a scalar map given with its first two derivatives.
CylFunction compose(std::function<double(double)> outer, std::function<double(double)> d_outer,
                    std::function<double(double)> dd_outer, const CylFunction& f, std::string id);

/// Fixed test battery: constants, coordinates, sin/cos of random linear forms,
/// a product of those, and a saturated |x|^2.
std::vector<CylFunction> standard_battery(std::size_t dim, std::uint64_t seed);

/// Largest relative error of the analytic gradient against centred differences
/// with step 1e-5 (1 + |x_h|), over `probes` points drawn from `law`.
double gradient_fd_error(const CylFunction& f, const ProductLaw& law, std::size_t probes, std::uint64_t seed);
}  // namespace cyl

/// The law together with R = Q^{1/2} (diagonal), the square root of its covariance.
struct OperatorContext {
    ProductLaw law;
    double b1 = 1.0;               // b_{m,1}
    std::vector<double> r_diag;    // (b_{m,1} mu_h^{1/m})^{1/2}
    std::vector<double> q_diag;    // r_diag^2
    std::vector<double> score_scale;  // 1 / mu_h

    explicit OperatorContext(ProductLaw law);
    std::size_t dim() const { return law.dim(); }
    int m() const { return law.m(); }
    /// |x_h|^{2m-2} x_h / mu_h, minus the derivative of the log-density.
    double score(std::size_t h, double xh) const;
    double trace_q() const;
};

/// M phi(x) = Q^{1/2} grad phi(x).
std::vector<double> apply_M(const OperatorContext& ctx, const CylFunction& phi, ConstSpan x);
void apply_M(const OperatorContext& ctx, const CylFunction& phi, ConstSpan x, MutSpan out);

/// W_z(x) = b_{m,1}^{1/2} sum_h mu_h^{1/(2m)-1} |x_h|^{2m-2} x_h z_h.
double white_noise(const OperatorContext& ctx, ConstSpan z, ConstSpan x);

/// A vector field together with an optional closed-form adjoint divergence M*F.
struct VectorField {
    std::string id;
    std::size_t dim = 0;
    std::function<void(ConstSpan, MutSpan)> eval;
    std::function<double(ConstSpan)> divergence;  // may be empty
};

/// Which second term to use in the sphere-field divergence:
/// sum_h q_h^2 x_h^2 = |Qx|^2, or sum_h q_h^4 x_h^2 = |Q^2 x|^2.
enum class SphereDivReading { QxSquared, Q2xSquared };
std::string to_string(SphereDivReading r);

VectorField constant_field(const OperatorContext& ctx, std::vector<double> z);
/// Psi(x) = Q^{1/2}x / (2 |Q^{1/2}x|^2), the field Mg/|Mg|^2 of g = |x|^2.
VectorField sphere_field(const OperatorContext& ctx, SphereDivReading reading = SphereDivReading::QxSquared);
/// Psi = Q^{1/2}b / |Q^{1/2}b|^2, the field of g = <x, b>.
VectorField hyperplane_field(const OperatorContext& ctx, std::vector<double> b);
/// psi(x) F(x), with M*(psi F) = psi M*F - <M psi, F>.
VectorField scaled_field(const OperatorContext& ctx, const CylFunction& psi, const VectorField& F);
VectorField negated_field(const VectorField& F);
/// Divergence assembled from the diagonal Jacobian of F:
/// M*F = sum_h r_h (f_h score_h - d_h f_h).
std::function<double(ConstSpan)> divergence_from_jacobian(const OperatorContext& ctx,
                                                          std::function<void(ConstSpan, MutSpan)> eval,
                                                          std::function<void(ConstSpan, MutSpan)> jac_diag);

/// Smallest |Q^{1/2}x|^2 accepted by the sphere field before it reports a singularity.
inline constexpr double kSphereSingularity = 1e-300;

/// Monte Carlo estimate of int <M phi, z> dnu - int W_z phi dnu.
McEstimate ibp_residual(const OperatorContext& ctx, const CylFunction& phi, ConstSpan z, const SampleBatch& batch);

/// Monte Carlo estimate of int <M phi, F> dnu - int phi M*F dnu.
McEstimate divergence_residual(const OperatorContext& ctx, const VectorField& F, const CylFunction& phi,
                               const SampleBatch& batch);

/// L phi(x) = 1/2 sum_h d_hh phi(x) - sum_h |x_h|^{2m-2} x_h d_h phi(x) / (2 mu_h).
double generator_apply(const OperatorContext& ctx, const CylFunction& phi, ConstSpan x);

/// Monte Carlo estimate of int L phi dnu.
McEstimate generator_mean(const OperatorContext& ctx, const CylFunction& phi, const SampleBatch& batch);

/// Pass rule shared by every residual test: |estimate| <= k * SE and SE <= cap.
struct TolerancePolicy {
    double se_multiplier = 4.0;
    double se_cap = 1e-2;

    bool accepts(const McEstimate& e) const { return e.within(se_multiplier) && e.std_error <= se_cap; }
};

struct ResidualRecord {
    std::string operation;
    std::string phi_id;
    std::string field_id;
    McEstimate estimate;
    bool pass = false;
};

/// Runs divergence_residual for every battery member. The field is certified
/// when every record passes and int M*F dnu vanishes within tolerance.
struct FieldCertificate {
    std::string field_id;
    std::vector<ResidualRecord> records;
    McEstimate divergence_mean;
    bool certified = false;
};

FieldCertificate certify_field(const OperatorContext& ctx, const VectorField& F, const std::vector<CylFunction>& battery,
                               const SampleBatch& batch, const TolerancePolicy& policy);

}  // namespace surfmeas

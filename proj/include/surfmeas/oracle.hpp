#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "surfmeas/calculus.hpp"

namespace surfmeas {

enum class LevelKind;

namespace oracle {

/// Both sides of int <M phi, F> dnu = int phi M*F dnu by deterministic
/// quadrature in dimension 1, 2 or 3 (polar or spherical coordinates about the
/// origin, angles integrated first). `point_defect` is the flux of F through an infinitesimal
/// circle at the origin times -p(0) phi(0); it is non-zero only for fields
/// with a 1/|x| singularity there, and lhs = rhs + point_defect.
struct AdjointQuadrature {
    double lhs = 0.0;
    double rhs = 0.0;
    double point_defect = 0.0;
    double scale = 0.0;  // int |<M phi, F>| + |phi M*F| dnu, for relative errors

    double relative_gap() const;
};

AdjointQuadrature adjoint_identity(const OperatorContext& ctx, const VectorField& F, const CylFunction& phi,
                                   double origin_flux = 0.0);

/// Both sides of int <M phi, z> dnu = int W_z phi dnu for a one-dimensional law.
AdjointQuadrature ibp_identity_1d(const OperatorContext& ctx, const CylFunction& phi, double z);

/// Product density of the law at x.
double product_density(const ProductLaw& law, ConstSpan x);

/// int_{g=r} phi w gamma / |grad g| dH^{n-1} for the centred Gaussian with the
/// given variances, n in {2, 3}. Sphere g = |x|^2 (Gauss-Legendre in the polar
/// cosine, trapezoid in azimuth), hyperplane g = <x, b> (tensor Gauss-Legendre
/// on the affine slice). `weight` multiplies the Gaussian density.
double coarea_oracle(const std::vector<double>& variances, const std::function<double(ConstSpan)>& weight,
                     LevelKind kind, const std::vector<double>& b, const CylFunction& phi, double r);

/// Tensor Gauss-Legendre integral of f against the centred Gaussian with the
/// given variances, n <= 3.
double gaussian_expectation(const std::vector<double>& variances, const std::function<double(ConstSpan)>& f,
                            int nodes_per_axis = 96);

/// w = exp(2U) / Z with Z = int exp(2U) dgamma, returned with its gradient.
/// `u` must carry value and gradient.
CylFunction normalized_exp_weight(const std::vector<double>& variances, const CylFunction& u);

}  // namespace oracle
}  // namespace surfmeas

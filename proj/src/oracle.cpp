#include "surfmeas/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "surfmeas/errors.hpp"
#include "surfmeas/quadrature.hpp"
#include "surfmeas/scratch.hpp"
#include "surfmeas/surface.hpp"

namespace surfmeas::oracle {

namespace {

constexpr double kPi = std::numbers::pi;

// Radius of a ball outside which the density has dropped by e^{-80}: every
// point outside has some coordinate beyond the per-axis cutoff divided by sqrt(n).
double support_radius(const ProductLaw& law) {
    double r = 0.0;
    for (std::size_t h = 0; h < law.dim(); ++h) {
        const int m = law.m();
        r = std::max(r, std::pow(160.0 * m * law.weight(h), 1.0 / (2.0 * m)));
    }
    return r * std::sqrt(static_cast<double>(law.dim()));
}

struct Terms {
    double lhs;
    double rhs;
    double abs_sum;
};

struct Density {
    std::vector<OneDimLaw> laws;
    explicit Density(const ProductLaw& law) {
        for (std::size_t h = 0; h < law.dim(); ++h) laws.push_back(law.coordinate(h));
    }
    double operator()(ConstSpan x) const {
        double p = 1.0;
        for (std::size_t h = 0; h < laws.size(); ++h) p *= laws[h].density(x[h]);
        return p;
    }
};

Terms integrand(const OperatorContext& ctx, const Density& density, const VectorField& F, const CylFunction& phi,
                ConstSpan x) {
    ScratchFrame frame;
    auto g = frame.take(x.size());
    auto f = frame.take(x.size());
    apply_M(ctx, phi, x, g);
    F.eval(x, f);
    double inner = 0.0;
    for (std::size_t h = 0; h < x.size(); ++h) inner += g[h] * f[h];
    const double p = density(x);
    const double rhs = phi.value(x) * F.divergence(x);
    return {inner * p, rhs * p, (std::abs(inner) + std::abs(rhs)) * p};
}

}  // namespace

double AdjointQuadrature::relative_gap() const {
    const double denom = std::max({std::abs(lhs), std::abs(rhs + point_defect), scale * 1e-3, 1e-300});
    return std::abs(lhs - rhs - point_defect) / denom;
}

double product_density(const ProductLaw& law, ConstSpan x) {
    double p = 1.0;
    for (std::size_t h = 0; h < law.dim(); ++h) p *= law.coordinate(h).density(x[h]);
    return p;
}

AdjointQuadrature adjoint_identity(const OperatorContext& ctx, const VectorField& F, const CylFunction& phi,
                                   double origin_flux) {
    if (!F.divergence) throw ValidationRequired("adjoint_identity: field has no candidate divergence");
    const std::size_t n = ctx.dim();
    AdjointQuadrature out;
    const Density density(ctx.law);
    const double radius = support_radius(ctx.law);
    if (n == 1) {
        const auto rule_neg = quad::composite(64, 20, -radius, 0.0);
        const auto rule_pos = quad::composite(64, 20, 0.0, radius);
        for (const auto* rule : {&rule_neg, &rule_pos}) {
            for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
                const double x[1] = {rule->nodes[i]};
                const Terms t = integrand(ctx, density, F, phi, x);
                out.lhs += rule->weights[i] * t.lhs;
                out.rhs += rule->weights[i] * t.rhs;
                out.scale += rule->weights[i] * t.abs_sum;
            }
        }
    } else if (n == 2) {
        // Polar coordinates; the trapezoid rule in angle is spectrally accurate
        // and integrates angular derivatives of periodic functions to zero,
        // which is what makes the conditionally convergent 1/rho^2 terms vanish.
        const int n_angle = 256;
        const auto radial = quad::composite(48, 20, 0.0, radius);
        for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
            const double rho = radial.nodes[i];
            double lhs = 0.0, rhs = 0.0, abs_sum = 0.0;
            for (int k = 0; k < n_angle; ++k) {
                const double theta = 2.0 * kPi * k / n_angle;
                const double x[2] = {rho * std::cos(theta), rho * std::sin(theta)};
                const Terms t = integrand(ctx, density, F, phi, x);
                lhs += t.lhs;
                rhs += t.rhs;
                abs_sum += t.abs_sum;
            }
            const double w = radial.weights[i] * rho * 2.0 * kPi / n_angle;
            out.lhs += w * lhs;
            out.rhs += w * rhs;
            out.scale += w * abs_sum;
        }
    } else if (n == 3) {
        // Larger m concentrates the density in angle at large radii.
        const int n_azimuth = 48 * (ctx.m() + 1);
        const auto polar = quad::gauss_legendre(48 * ctx.m());
        const auto radial = quad::composite(32, 20, 0.0, radius);
        for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
            const double rho = radial.nodes[i];
            double lhs = 0.0, rhs = 0.0, abs_sum = 0.0;
            for (std::size_t j = 0; j < polar.nodes.size(); ++j) {
                const double c = polar.nodes[j];
                const double sn = std::sqrt(1.0 - c * c);
                for (int k = 0; k < n_azimuth; ++k) {
                    const double phi_k = 2.0 * kPi * k / n_azimuth;
                    const double x[3] = {rho * sn * std::cos(phi_k), rho * sn * std::sin(phi_k), rho * c};
                    const Terms t = integrand(ctx, density, F, phi, x);
                    lhs += polar.weights[j] * t.lhs;
                    rhs += polar.weights[j] * t.rhs;
                    abs_sum += polar.weights[j] * t.abs_sum;
                }
            }
            const double w = radial.weights[i] * rho * rho * 2.0 * kPi / n_azimuth;
            out.lhs += w * lhs;
            out.rhs += w * rhs;
            out.scale += w * abs_sum;
        }
    } else {
        throw PreconditionError("adjoint_identity: quadrature oracle supports dimension 1 to 3");
    }
    if (origin_flux != 0.0) {
        const std::vector<double> zero(n, 0.0);
        out.point_defect = -origin_flux * product_density(ctx.law, zero) * phi.value(zero);
    }
    return out;
}

AdjointQuadrature ibp_identity_1d(const OperatorContext& ctx, const CylFunction& phi, double z) {
    if (ctx.dim() != 1) throw DimensionMismatch("ibp_identity_1d: law must be one-dimensional");
    const OneDimLaw law = ctx.law.coordinate(0);
    const std::vector<double> zz{z};
    AdjointQuadrature out;
    out.lhs = quad::integrate_real_line([&](double t) {
        const double x[1] = {t};
        double g[1];
        phi.grad(x, g);
        return ctx.r_diag[0] * g[0] * z * law.density(t);
    });
    out.rhs = quad::integrate_real_line([&](double t) {
        const double x[1] = {t};
        return white_noise(ctx, zz, x) * phi.value(x) * law.density(t);
    });
    out.scale = std::abs(out.lhs) + std::abs(out.rhs);
    return out;
}

double gaussian_expectation(const std::vector<double>& variances, const std::function<double(ConstSpan)>& f,
                            int nodes_per_axis) {
    const std::size_t n = variances.size();
    if (n == 0 || n > 3) throw PreconditionError("gaussian_expectation: dimension must be 1, 2 or 3");
    std::vector<quad::Rule> rules;
    for (double v : variances) {
        const double half = 13.0 * std::sqrt(v);
        rules.push_back(quad::composite(nodes_per_axis / 16, 16, -half, half));
    }
    auto density = [&](ConstSpan x) {
        double p = 1.0;
        for (std::size_t h = 0; h < n; ++h)
            p *= std::exp(-0.5 * x[h] * x[h] / variances[h]) / std::sqrt(2.0 * kPi * variances[h]);
        return p;
    };
    double total = 0.0;
    std::vector<double> x(n);
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
        double w = 1.0;
        for (std::size_t h = 0; h < n; ++h) {
            x[h] = rules[h].nodes[idx[h]];
            w *= rules[h].weights[idx[h]];
        }
        total += w * f(x) * density(x);
        std::size_t h = 0;
        while (h < n && ++idx[h] == rules[h].nodes.size()) idx[h++] = 0;
        if (h == n) break;
    }
    return total;
}

CylFunction normalized_exp_weight(const std::vector<double>& variances, const CylFunction& u) {
    const double z = gaussian_expectation(variances, [&](ConstSpan x) { return std::exp(2.0 * u.value(x)); });
    CylFunction w;
    w.id = "exp(2U)/Z";
    w.dim = u.dim;
    w.value = [u, z](ConstSpan x) { return std::exp(2.0 * u.value(x)) / z; };
    w.grad = [u, z](ConstSpan x, MutSpan g) {
        u.grad(x, g);
        const double v = 2.0 * std::exp(2.0 * u.value(x)) / z;
        for (auto& c : g) c *= v;
    };
    w.bounded = u.bounded;
    return w;
}

double coarea_oracle(const std::vector<double>& variances, const std::function<double(ConstSpan)>& weight,
                     LevelKind kind, const std::vector<double>& b, const CylFunction& phi, double r) {
    const std::size_t n = variances.size();
    if (n != 2 && n != 3) throw PreconditionError("coarea_oracle: dimension must be 2 or 3");
    auto gauss = [&](ConstSpan x) {
        double p = 1.0;
        for (std::size_t h = 0; h < n; ++h)
            p *= std::exp(-0.5 * x[h] * x[h] / variances[h]) / std::sqrt(2.0 * kPi * variances[h]);
        return p;
    };
    auto integrand = [&](ConstSpan x) { return phi.value(x) * weight(x) * gauss(x); };

    if (kind == LevelKind::Sphere) {
        if (r <= 0.0) return 0.0;
        const double radius = std::sqrt(r);
        if (n == 2) {
            // |grad g| = 2R, arc length R dtheta
            const int steps = 1024;
            double s = 0.0;
            for (int k = 0; k < steps; ++k) {
                const double t = 2.0 * kPi * k / steps;
                const double x[2] = {radius * std::cos(t), radius * std::sin(t)};
                s += integrand(x);
            }
            return 0.5 * s * 2.0 * kPi / steps;
        }
        const auto cos_rule = quad::gauss_legendre(96);
        const int steps = 256;
        double s = 0.0;
        for (std::size_t i = 0; i < cos_rule.nodes.size(); ++i) {
            const double c = cos_rule.nodes[i];
            const double sn = std::sqrt(1.0 - c * c);
            double ring = 0.0;
            for (int k = 0; k < steps; ++k) {
                const double t = 2.0 * kPi * k / steps;
                const double x[3] = {radius * sn * std::cos(t), radius * sn * std::sin(t), radius * c};
                ring += integrand(x);
            }
            s += cos_rule.weights[i] * ring * 2.0 * kPi / steps;
        }
        // dH = R^2 dOmega, divided by |grad g| = 2R
        return s * radius * radius / (2.0 * radius);
    }
    if (kind != LevelKind::Hyperplane) throw PreconditionError("coarea_oracle: level kind must be sphere or hyperplane");
    if (b.size() != n) throw DimensionMismatch("coarea_oracle: direction dimension mismatch");
    double bnorm = 0.0;
    for (double v : b) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    if (!(bnorm > 0.0)) throw PreconditionError("coarea_oracle: b = 0");
    // Orthonormal basis of b-perp by Gram-Schmidt on the coordinate axes.
    std::vector<std::vector<double>> basis;
    std::vector<double> unit(b);
    for (auto& v : unit) v /= bnorm;
    for (std::size_t e = 0; e < n && basis.size() + 1 < n; ++e) {
        std::vector<double> v(n, 0.0);
        v[e] = 1.0;
        auto project_out = [&](const std::vector<double>& u) {
            double d = 0.0;
            for (std::size_t h = 0; h < n; ++h) d += v[h] * u[h];
            for (std::size_t h = 0; h < n; ++h) v[h] -= d * u[h];
        };
        project_out(unit);
        for (const auto& u : basis) project_out(u);
        double len = 0.0;
        for (double c : v) len += c * c;
        len = std::sqrt(len);
        if (len < 1e-8) continue;
        for (auto& c : v) c /= len;
        basis.push_back(v);
    }
    double sd = 0.0;
    for (double v : variances) sd = std::max(sd, std::sqrt(v));
    const auto rule = quad::composite(12, 16, -13.0 * sd, 13.0 * sd);
    std::vector<double> x(n);
    double total = 0.0;
    const std::size_t k = rule.nodes.size();
    const std::size_t dims = basis.size();
    std::vector<std::size_t> idx(dims, 0);
    for (;;) {
        double w = 1.0;
        for (std::size_t h = 0; h < n; ++h) x[h] = r * unit[h] / bnorm;
        for (std::size_t j = 0; j < dims; ++j) {
            w *= rule.weights[idx[j]];
            for (std::size_t h = 0; h < n; ++h) x[h] += rule.nodes[idx[j]] * basis[j][h];
        }
        total += w * integrand(x);
        std::size_t j = 0;
        while (j < dims && ++idx[j] == k) idx[j++] = 0;
        if (j == dims) break;
    }
    return total / bnorm;
}

}  // namespace surfmeas::oracle

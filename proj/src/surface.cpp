#include "surfmeas/surface.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "surfmeas/errors.hpp"
#include "surfmeas/oracle.hpp"
#include "surfmeas/rng.hpp"
#include "surfmeas/scratch.hpp"

namespace surfmeas {

std::string to_string(LevelKind k) {
    switch (k) {
        case LevelKind::Sphere: return "sphere";
        case LevelKind::Hyperplane: return "hyperplane";
        case LevelKind::Custom: return "custom";
    }
    return "custom";
}

std::string to_string(DensityMethod m) {
    switch (m) {
        case DensityMethod::Divergence: return "divergence";
        case DensityMethod::SmoothedFd: return "smoothed_fd";
        case DensityMethod::Oracle: return "oracle";
    }
    return "divergence";
}

namespace {

// <M phi, F>(x) - phi(x) M*F(x)
double adjoint_term(const OperatorContext& ctx, const CylFunction& phi, const VectorField& F, ConstSpan x) {
    ScratchFrame frame;
    auto g = frame.take(x.size());
    auto f = frame.take(x.size());
    apply_M(ctx, phi, x, g);
    F.eval(x, f);
    double inner = 0.0;
    for (std::size_t h = 0; h < x.size(); ++h) inner += g[h] * f[h];
    return inner - phi.value(x) * F.divergence(x);
}

// Row contribution of an integral restricted to one side of {g = r}; the
// Above side carries the sign that turns it into the Below-side value.
double side_weight(Side side, double gx, double r) {
    if (side == Side::Below) return gx < r ? 1.0 : 0.0;
    return gx > r ? -1.0 : 0.0;
}

void require_certified(const LevelFunction& lf) {
    if (!lf.psi_certified)
        throw ValidationRequired("level function '" + lf.g.id + "': divergence of Psi has not been certified");
}

void require_batch(const OperatorContext& ctx, const SampleBatch& batch) {
    if (batch.count == 0) throw EmptyBatch();
    if (batch.dim != ctx.dim()) throw DimensionMismatch("batch dimension does not match the law");
}

SurfaceDensityEstimate as_density(const McEstimate& e, double r, DensityMethod method) {
    SurfaceDensityEstimate s;
    s.r = r;
    s.value = e.value;
    s.std_error = e.std_error;
    s.n_samples = e.n_samples;
    s.seed = e.seed;
    s.method = method;
    return s;
}

McEstimate from_density(const SurfaceDensityEstimate& s) {
    return McEstimate{s.value, s.std_error, s.n_samples, s.seed};
}

}  // namespace

LevelFunction sphere_level(const OperatorContext& ctx, SphereDivReading reading) {
    const std::size_t n = ctx.dim();
    if (n < 2) throw PreconditionError("sphere level function needs dimension >= 2");
    LevelFunction lf;
    lf.kind = LevelKind::Sphere;
    lf.g.id = "|x|^2";
    lf.g.dim = n;
    lf.g.value = [](ConstSpan x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    lf.g.grad = [](ConstSpan x, MutSpan out) {
        for (std::size_t h = 0; h < x.size(); ++h) out[h] = 2.0 * x[h];
    };
    lf.g.hess_diag = [](ConstSpan, MutSpan out) { std::fill(out.begin(), out.end(), 2.0); };
    lf.psi = sphere_field(ctx, reading);

    const std::vector<double> r = ctx.r_diag;
    const std::vector<double> q = ctx.q_diag;
    auto norm_sq = [q](ConstSpan x) {
        double s = 0.0;
        for (std::size_t h = 0; h < q.size(); ++h) s += q[h] * x[h] * x[h];
        if (s < kSphereSingularity) throw Singularity("sphere normal: |Q^{1/2}x|^2 vanishes at the probe point");
        return s;
    };
    lf.normal.id = "sphere_normal";
    lf.normal.dim = n;
    lf.normal.eval = [r, norm_sq](ConstSpan x, MutSpan out) {
        const double root = std::sqrt(norm_sq(x));
        for (std::size_t h = 0; h < r.size(); ++h) out[h] = r[h] * x[h] / root;
    };
    // N = 2 sqrt(S) Psi, so M*N = 2 sqrt(S) M*Psi - |Qx|^2 / S^{3/2}.
    const auto psi_div = lf.psi.divergence;
    lf.normal.divergence = [q, norm_sq, psi_div](ConstSpan x) {
        const double s = norm_sq(x);
        double qx = 0.0;
        for (std::size_t h = 0; h < q.size(); ++h) qx += q[h] * q[h] * x[h] * x[h];
        return 2.0 * std::sqrt(s) * psi_div(x) - qx / (s * std::sqrt(s));
    };

    lf.mg_norm.id = "2|Q^{1/2}x|";
    lf.mg_norm.dim = n;
    lf.mg_norm.value = [q](ConstSpan x) {
        double s = 0.0;
        for (std::size_t h = 0; h < q.size(); ++h) s += q[h] * x[h] * x[h];
        return 2.0 * std::sqrt(s);
    };
    lf.mg_norm.grad = [q, norm_sq](ConstSpan x, MutSpan out) {
        const double root = std::sqrt(norm_sq(x));
        for (std::size_t h = 0; h < q.size(); ++h) out[h] = 2.0 * q[h] * x[h] / root;
    };
    // In dimension 2 div Psi has a point mass at the origin; up to dimension 4
    // |M*Psi|^2 is not integrable near it. Either way the representation
    // integrates over {g > r}.
    if (n <= 4) lf.singular_level = 0.0;
    return lf;
}

LevelFunction hyperplane_level(const OperatorContext& ctx, std::vector<double> b) {
    const std::size_t n = ctx.dim();
    if (b.size() != n) throw DimensionMismatch("hyperplane level: direction has the wrong dimension");
    LevelFunction lf;
    lf.kind = LevelKind::Hyperplane;
    lf.psi = hyperplane_field(ctx, b);
    lf.b = b;
    lf.g.id = "<x,b>";
    lf.g.dim = n;
    lf.g.value = [b](ConstSpan x) {
        double s = 0.0;
        for (std::size_t h = 0; h < b.size(); ++h) s += b[h] * x[h];
        return s;
    };
    lf.g.grad = [b](ConstSpan, MutSpan out) { std::copy(b.begin(), b.end(), out.begin()); };
    lf.g.hess_diag = [](ConstSpan, MutSpan out) { std::fill(out.begin(), out.end(), 0.0); };

    std::vector<double> rb(n);
    double norm_sq = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
        rb[h] = ctx.r_diag[h] * b[h];
        norm_sq += rb[h] * rb[h];
    }
    const double norm = std::sqrt(norm_sq);
    lf.normal.id = "hyperplane_normal";
    lf.normal.dim = n;
    lf.normal.eval = [rb, norm](ConstSpan, MutSpan out) {
        for (std::size_t h = 0; h < rb.size(); ++h) out[h] = rb[h] / norm;
    };
    const auto psi_div = lf.psi.divergence;
    lf.normal.divergence = [psi_div, norm](ConstSpan x) { return norm * psi_div(x); };
    lf.mg_norm = cyl::constant(n, norm);
    lf.mg_norm.id = "|Q^{1/2}b|";
    return lf;
}

CylFunction mg_dot(const OperatorContext& ctx, const LevelFunction& lf, std::vector<double> z) {
    const std::size_t n = ctx.dim();
    if (z.size() != n) throw DimensionMismatch("mg_dot: direction has the wrong dimension");
    CylFunction f;
    f.id = "<Mg,z>";
    f.dim = n;
    f.bounded = lf.kind == LevelKind::Hyperplane;
    f.hess_diag = [](ConstSpan, MutSpan out) { std::fill(out.begin(), out.end(), 0.0); };
    std::vector<double> rz(n);
    for (std::size_t h = 0; h < n; ++h) rz[h] = ctx.r_diag[h] * z[h];
    if (lf.kind == LevelKind::Sphere) {
        f.value = [rz](ConstSpan x) {
            double s = 0.0;
            for (std::size_t h = 0; h < rz.size(); ++h) s += 2.0 * rz[h] * x[h];
            return s;
        };
        f.grad = [rz](ConstSpan, MutSpan out) {
            for (std::size_t h = 0; h < rz.size(); ++h) out[h] = 2.0 * rz[h];
        };
        return f;
    }
    if (lf.kind != LevelKind::Hyperplane) throw PreconditionError("mg_dot: custom level functions are not supported");
    double c = 0.0;
    for (std::size_t h = 0; h < n; ++h) c += rz[h] * lf.b[h];
    f.value = [c](ConstSpan) { return c; };
    f.grad = [](ConstSpan, MutSpan out) { std::fill(out.begin(), out.end(), 0.0); };
    return f;
}

FieldCertificate certify_level(const OperatorContext& ctx, LevelFunction& lf, const std::vector<CylFunction>& battery,
                               const SampleBatch& batch, const TolerancePolicy& policy) {
    FieldCertificate cert;
    if (lf.kind == LevelKind::Sphere && ctx.dim() <= 3) {
        // Here |M*Psi|^2 is not integrable, so Monte Carlo residuals have no
        // usable error bar. In dimension 2 the flux of Q^{1/2}Psi through a
        // small circle about the origin is pi for every Q, and the identity
        // carries the point term -pi p(0) phi(0).
        const double kFlux = ctx.dim() == 2 ? std::numbers::pi : 0.0;
        constexpr double kRelTol = 1e-6;
        cert.field_id = lf.psi.id;
        cert.certified = true;
        for (const auto& phi : battery) {
            const auto q = oracle::adjoint_identity(ctx, lf.psi, phi, kFlux);
            ResidualRecord rec{"divergence_quadrature", phi.id, lf.psi.id,
                               McEstimate{q.lhs - q.rhs - q.point_defect, 0.0, 0, 0}, q.relative_gap() <= kRelTol};
            cert.certified = cert.certified && rec.pass;
            cert.records.push_back(std::move(rec));
        }
        const auto one = oracle::adjoint_identity(ctx, lf.psi, cyl::constant(ctx.dim(), 1.0), kFlux);
        cert.divergence_mean = McEstimate{one.rhs + one.point_defect, 0.0, 0, 0};
        cert.certified = cert.certified && std::abs(cert.divergence_mean.value) <= kRelTol * one.scale;
    } else {
        cert = certify_field(ctx, lf.psi, battery, batch, policy);
    }
    lf.psi_certified = cert.certified;
    return cert;
}

Side representation_side(const LevelFunction& lf, double r, const SampleBatch& batch) {
    if (lf.singular_level) return r > *lf.singular_level ? Side::Above : Side::Below;
    if (batch.count == 0) throw EmptyBatch();
    std::size_t below = 0;
    for (std::size_t i = 0; i < batch.count; ++i) below += lf.g.value(batch.row(i)) < r ? 1 : 0;
    return 2 * below <= batch.count ? Side::Below : Side::Above;
}

std::vector<double> level_values(const LevelFunction& lf, const SampleBatch& batch) {
    std::vector<double> out(batch.count);
    for (std::size_t i = 0; i < batch.count; ++i) out[i] = lf.g.value(batch.row(i));
    return out;
}

McEstimate sublevel_integral(const LevelFunction& lf, const CylFunction& phi, double r, const SampleBatch& batch) {
    return batch_mean(batch, [&](ConstSpan x) { return lf.g.value(x) <= r ? phi.value(x) : 0.0; });
}

SurfaceDensityEstimate q_divergence(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi,
                                    double r, const SampleBatch& batch) {
    require_certified(lf);
    require_batch(ctx, batch);
    const Side side = representation_side(lf, r, batch);
    const auto e = batch_mean(batch, [&](ConstSpan x) {
        const double w = side_weight(side, lf.g.value(x), r);
        return w == 0.0 ? 0.0 : w * adjoint_term(ctx, phi, lf.psi, x);
    });
    return as_density(e, r, DensityMethod::Divergence);
}

SurfaceDensityEstimate q_smoothed_fd(const LevelFunction& lf, const CylFunction& phi, double r,
                                     const SampleBatch& batch, double bandwidth) {
    if (!(bandwidth > 0.0)) throw PreconditionError("q_smoothed_fd: bandwidth must be positive");
    if (batch.count == 0) throw EmptyBatch();
    std::size_t in_window = 0;
    for (std::size_t i = 0; i < batch.count; ++i) {
        const double gx = lf.g.value(batch.row(i));
        in_window += (gx > r - bandwidth && gx <= r + bandwidth) ? 1 : 0;
    }
    if (in_window < 100)
        throw UnderResolved("q_smoothed_fd: only " + std::to_string(in_window) +
                            " samples fall within the bandwidth window (need 100)");
    const double scale = 1.0 / (2.0 * bandwidth);
    const auto e = batch_mean(batch, [&](ConstSpan x) {
        const double gx = lf.g.value(x);
        return (gx > r - bandwidth && gx <= r + bandwidth) ? phi.value(x) * scale : 0.0;
    });
    return as_density(e, r, DensityMethod::SmoothedFd);
}

double default_bandwidth(const std::vector<double>& sorted_g, double r, std::size_t min_window) {
    const std::size_t n = sorted_g.size();
    if (n < 2) throw EmptyBatch();
    double mean = 0.0;
    for (double v : sorted_g) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : sorted_g) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n - 1));
    const double span = sorted_g.back() - sorted_g.front();
    double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
    if (!(h > 0.0)) h = span > 0.0 ? span : 1.0;
    // Keep the window inside the sample range: past its edge the empirical
    // CDF is flat and the difference quotient is biased low.
    const double room = std::min(r - sorted_g.front(), sorted_g.back() - r);
    if (room > 0.0) h = std::min(h, room);
    const std::size_t need = std::min(min_window, n);
    auto count = [&](double width) {
        const auto lo = std::upper_bound(sorted_g.begin(), sorted_g.end(), r - width);
        const auto hi = std::upper_bound(sorted_g.begin(), sorted_g.end(), r + width);
        return static_cast<std::size_t>(hi - lo);
    };
    const double limit = 2.0 * (span + std::abs(r - mean)) + h;
    while (count(h) < need && h < limit) h *= 1.25;
    return h;
}

McEstimate q_method_gap(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi, double r,
                        const SampleBatch& batch, double bandwidth) {
    require_certified(lf);
    require_batch(ctx, batch);
    q_smoothed_fd(lf, phi, r, batch, bandwidth);  // enforces the window size
    const Side side = representation_side(lf, r, batch);
    const double scale = 1.0 / (2.0 * bandwidth);
    return batch_mean(batch, [&](ConstSpan x) {
        const double gx = lf.g.value(x);
        const double w = side_weight(side, gx, r);
        const double div = w == 0.0 ? 0.0 : w * adjoint_term(ctx, phi, lf.psi, x);
        const double fd = (gx > r - bandwidth && gx <= r + bandwidth) ? phi.value(x) * scale : 0.0;
        return div - fd;
    });
}

McEstimate surface_integral(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi, double r,
                            const SampleBatch& batch) {
    return from_density(q_divergence(ctx, lf, phi, r, batch));
}

McEstimate rho_integral(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi, double r,
                        const SampleBatch& batch) {
    require_certified(lf);
    require_batch(ctx, batch);
    const Side side = representation_side(lf, r, batch);
    return batch_mean(batch, [&](ConstSpan x) {
        const double w = side_weight(side, lf.g.value(x), r);
        return w == 0.0 ? 0.0 : w * adjoint_term(ctx, phi, lf.normal, x);
    });
}

McEstimate ibp_sublevel_residual(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi,
                                 std::vector<double> z, double r, const SampleBatch& batch) {
    require_certified(lf);
    require_batch(ctx, batch);
    if (z.size() != ctx.dim()) throw DimensionMismatch("ibp_sublevel_residual: z has the wrong dimension");
    const CylFunction psi = cyl::product(mg_dot(ctx, lf, z), phi);
    const Side side = representation_side(lf, r, batch);
    return batch_mean(batch, [&](ConstSpan x) {
        const double gx = lf.g.value(x);
        double out = 0.0;
        if (gx < r) {
            ScratchFrame frame;
            auto g = frame.take(x.size());
            apply_M(ctx, phi, x, g);
            double inner = 0.0;
            for (std::size_t h = 0; h < x.size(); ++h) inner += g[h] * z[h];
            out = inner - phi.value(x) * white_noise(ctx, z, x);
        }
        const double w = side_weight(side, gx, r);
        if (w != 0.0) out -= w * adjoint_term(ctx, psi, lf.psi, x);
        return out;
    });
}

PerimeterReport perimeter_inequality_check(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi,
                                           double r, const std::vector<VectorField>& fields,
                                           const SampleBatch& batch, double se_multiplier) {
    require_certified(lf);
    require_batch(ctx, batch);
    const std::size_t probes = std::min<std::size_t>(batch.count, 256);
    for (const auto& F : fields) {
        if (!F.divergence) throw ValidationRequired("perimeter check: field '" + F.id + "' has no divergence");
        std::vector<double> f(ctx.dim());
        for (std::size_t i = 0; i < probes; ++i) {
            F.eval(batch.row(i), f);
            double s = 0.0;
            for (double v : f) s += v * v;
            if (std::sqrt(s) > 1.0 + 1e-12)
                throw PreconditionError("perimeter check: field '" + F.id + "' exceeds unit norm at a probe point");
        }
    }
    PerimeterReport rep;
    rep.r = r;
    rep.rho = rho_integral(ctx, lf, phi, r, batch);
    rep.q1 = from_density(q_divergence(ctx, lf, cyl::constant(ctx.dim(), 1.0), r, batch));
    const Side side = representation_side(lf, r, batch);

    // The value of F is int_{g<r} M*(phi F) = -(row term of F); the gap is
    // paired row by row against the rho row term.
    auto evaluate = [&](const VectorField& F) {
        const auto pair = batch_means<2>(batch, [&](ConstSpan x) {
            const double w = side_weight(side, lf.g.value(x), r);
            if (w == 0.0) return std::array<double, 2>{0.0, 0.0};
            const double value = -w * adjoint_term(ctx, phi, F, x);
            const double rho = w * adjoint_term(ctx, phi, lf.normal, x);
            return std::array<double, 2>{value, rho - value};
        });
        PerimeterEntry e;
        e.field_id = F.id;
        e.value = pair[0];
        e.gap = pair[1];
        e.pass = e.gap.value >= -se_multiplier * e.gap.std_error;
        return e;
    };
    rep.pass = true;
    for (const auto& F : fields) {
        rep.entries.push_back(evaluate(F));
        rep.pass = rep.pass && rep.entries.back().pass;
    }
    PerimeterEntry maximiser = evaluate(negated_field(lf.normal));
    maximiser.field_id = "-Mg/|Mg|";
    rep.maximizer_equal = maximiser.gap.within(se_multiplier);
    maximiser.pass = rep.maximizer_equal;
    PerimeterEntry reversed = evaluate(lf.normal);
    reversed.field_id = "+Mg/|Mg|";
    const bool q1_positive = rep.q1.value > se_multiplier * rep.q1.std_error;
    rep.reversed_strict = reversed.gap.value > se_multiplier * reversed.gap.std_error;
    reversed.pass = reversed.pass && (!q1_positive || rep.reversed_strict);
    rep.pass = rep.pass && maximiser.pass && reversed.pass;
    rep.entries.push_back(std::move(maximiser));
    rep.entries.push_back(std::move(reversed));
    return rep;
}

std::vector<VectorField> random_unit_fields(const OperatorContext& ctx, std::size_t count, std::uint64_t seed) {
    const std::size_t n = ctx.dim();
    RandomStream rng(seed, 0);
    std::vector<VectorField> out;
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> z(n);
        double norm = 0.0;
        while (!(norm > 1e-8)) {
            norm = 0.0;
            for (auto& v : z) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
        }
        for (auto& v : z) v /= norm;
        VectorField F = constant_field(ctx, z);
        if (k % 2 == 1) {
            std::vector<double> a(n);
            for (auto& v : a) v = rng.normal() / std::sqrt(static_cast<double>(std::min<std::size_t>(n, 4)));
            const CylFunction mod = k % 4 == 1 ? cyl::sin_linear(a) : cyl::cos_linear(a);
            F = scaled_field(ctx, mod, F);
        }
        F.id = "unit_" + std::to_string(k);
        out.push_back(std::move(F));
    }
    return out;
}

PositivityReport q1_positivity_scan(const OperatorContext& ctx, const LevelFunction& lf,
                                    const std::vector<double>& r_grid, const SampleBatch& batch,
                                    double se_multiplier) {
    require_certified(lf);
    require_batch(ctx, batch);
    const auto g = level_values(lf, batch);
    const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
    PositivityReport rep;
    rep.g_min = *lo;
    rep.g_max = *hi;
    rep.pass = true;
    const CylFunction one = cyl::constant(ctx.dim(), 1.0);
    for (double r : r_grid) {
        PositivityEntry e;
        e.r = r;
        e.q = q_divergence(ctx, lf, one, r, batch);
        e.inside = r > rep.g_min && r < rep.g_max;
        e.pass = e.inside ? e.q.value > se_multiplier * e.q.std_error
                          : std::abs(e.q.value) <= se_multiplier * e.q.std_error;
        rep.pass = rep.pass && e.pass;
        rep.entries.push_back(e);
    }
    return rep;
}

std::vector<double> quantile_grid(const LevelFunction& lf, const SampleBatch& batch, std::vector<double> probs) {
    if (batch.count == 0) throw EmptyBatch();
    if (probs.empty())
        for (int k = 0; k < 10; ++k) probs.push_back(0.05 + 0.1 * k);
    auto g = level_values(lf, batch);
    std::sort(g.begin(), g.end());
    std::vector<double> out;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("quantile_grid: probabilities must lie in [0, 1]");
        const double pos = p * static_cast<double>(g.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        out.push_back(i + 1 < g.size() ? g[i] * (1.0 - frac) + g[i + 1] * frac : g[i]);
    }
    return out;
}

SurfaceDensityEstimate q_divergence_weighted(const OperatorContext& ctx, const LevelFunction& lf,
                                             const CylFunction& phi, const CylFunction& weight, double r,
                                             const SampleBatch& batch) {
    require_certified(lf);
    require_batch(ctx, batch);
    const Side side = representation_side(lf, r, batch);
    // w (<M phi, Psi> - phi M*_w Psi) with M*_w Psi = M*Psi - <M w, Psi> / w.
    const auto e = batch_mean(batch, [&](ConstSpan x) {
        const double s = side_weight(side, lf.g.value(x), r);
        if (s == 0.0) return 0.0;
        ScratchFrame frame;
        auto mw = frame.take(x.size());
        auto f = frame.take(x.size());
        apply_M(ctx, weight, x, mw);
        lf.psi.eval(x, f);
        double inner = 0.0;
        for (std::size_t h = 0; h < x.size(); ++h) inner += mw[h] * f[h];
        return s * (weight.value(x) * adjoint_term(ctx, phi, lf.psi, x) + phi.value(x) * inner);
    });
    return as_density(e, r, DensityMethod::Divergence);
}

}  // namespace surfmeas

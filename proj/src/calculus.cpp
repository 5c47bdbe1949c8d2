#include "surfmeas/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "surfmeas/errors.hpp"
#include "surfmeas/scratch.hpp"
#include "surfmeas/special.hpp"

namespace surfmeas {

namespace cyl {

CylFunction constant(std::size_t dim, double c) {
    CylFunction f;
    f.id = "const(" + std::to_string(c) + ")";
    f.dim = dim;
    f.value = [c](ConstSpan) { return c; };
    f.grad = [](ConstSpan, MutSpan g) { std::fill(g.begin(), g.end(), 0.0); };
    f.hess_diag = [](ConstSpan, MutSpan g) { std::fill(g.begin(), g.end(), 0.0); };
    f.bounded = true;
    return f;
}

CylFunction coordinate(std::size_t dim, std::size_t h) {
    if (h >= dim) throw DimensionMismatch("coordinate index out of range");
    CylFunction f;
    f.id = "x" + std::to_string(h + 1);
    f.dim = dim;
    f.value = [h](ConstSpan x) { return x[h]; };
    f.grad = [h](ConstSpan, MutSpan g) {
        std::fill(g.begin(), g.end(), 0.0);
        g[h] = 1.0;
    };
    f.hess_diag = [](ConstSpan, MutSpan g) { std::fill(g.begin(), g.end(), 0.0); };
    return f;
}

namespace {
double dot(const std::vector<double>& a, ConstSpan x) {
    double s = 0.0;
    for (std::size_t h = 0; h < a.size(); ++h) s += a[h] * x[h];
    return s;
}
}  // namespace

CylFunction sin_linear(std::vector<double> a, std::string id) {
    CylFunction f;
    f.id = std::move(id);
    f.dim = a.size();
    f.value = [a](ConstSpan x) { return std::sin(dot(a, x)); };
    f.grad = [a](ConstSpan x, MutSpan g) {
        const double c = std::cos(dot(a, x));
        for (std::size_t h = 0; h < a.size(); ++h) g[h] = c * a[h];
    };
    f.hess_diag = [a](ConstSpan x, MutSpan g) {
        const double s = std::sin(dot(a, x));
        for (std::size_t h = 0; h < a.size(); ++h) g[h] = -s * a[h] * a[h];
    };
    f.bounded = true;
    return f;
}

CylFunction cos_linear(std::vector<double> a, std::string id) {
    CylFunction f;
    f.id = std::move(id);
    f.dim = a.size();
    f.value = [a](ConstSpan x) { return std::cos(dot(a, x)); };
    f.grad = [a](ConstSpan x, MutSpan g) {
        const double s = -std::sin(dot(a, x));
        for (std::size_t h = 0; h < a.size(); ++h) g[h] = s * a[h];
    };
    f.hess_diag = [a](ConstSpan x, MutSpan g) {
        const double c = std::cos(dot(a, x));
        for (std::size_t h = 0; h < a.size(); ++h) g[h] = -c * a[h] * a[h];
    };
    f.bounded = true;
    return f;
}

CylFunction norm2_saturated(std::size_t dim) {
    CylFunction f;
    f.id = "norm2_saturated";
    f.dim = dim;
    f.value = [](ConstSpan x) {
        const double s = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
        return s / (1.0 + s);
    };
    // d_h = 2 x_h / (1+s)^2 ; d_hh = 2/(1+s)^2 - 8 x_h^2/(1+s)^3
    f.grad = [](ConstSpan x, MutSpan g) {
        const double s = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
        const double k = 2.0 / ((1.0 + s) * (1.0 + s));
        for (std::size_t h = 0; h < x.size(); ++h) g[h] = k * x[h];
    };
    f.hess_diag = [](ConstSpan x, MutSpan g) {
        const double s = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
        const double d = 1.0 + s;
        for (std::size_t h = 0; h < x.size(); ++h) g[h] = 2.0 / (d * d) - 8.0 * x[h] * x[h] / (d * d * d);
    };
    f.bounded = true;
    return f;
}

CylFunction gaussian_bump(std::vector<double> center, double width) {
    CylFunction f;
    f.id = "bump";
    f.dim = center.size();
    const double inv = 1.0 / (width * width);
    auto q = [center](ConstSpan x) {
        double s = 0.0;
        for (std::size_t h = 0; h < center.size(); ++h) s += (x[h] - center[h]) * (x[h] - center[h]);
        return s;
    };
    f.value = [q, inv](ConstSpan x) { return std::exp(-0.5 * inv * q(x)); };
    f.grad = [q, inv, center](ConstSpan x, MutSpan g) {
        const double v = std::exp(-0.5 * inv * q(x));
        for (std::size_t h = 0; h < center.size(); ++h) g[h] = -inv * (x[h] - center[h]) * v;
    };
    f.hess_diag = [q, inv, center](ConstSpan x, MutSpan g) {
        const double v = std::exp(-0.5 * inv * q(x));
        for (std::size_t h = 0; h < center.size(); ++h) {
            const double d = x[h] - center[h];
            g[h] = (inv * inv * d * d - inv) * v;
        }
    };
    f.bounded = true;
    return f;
}

CylFunction product(const CylFunction& f, const CylFunction& g) {
    if (f.dim != g.dim) throw DimensionMismatch("product: operand dimensions differ");
    CylFunction p;
    p.id = f.id + "*" + g.id;
    p.dim = f.dim;
    p.bounded = f.bounded && g.bounded;
    p.value = [f, g](ConstSpan x) { return f.value(x) * g.value(x); };
    p.grad = [f, g](ConstSpan x, MutSpan out) {
        ScratchFrame frame;
        auto gf = frame.take(out.size());
        auto gg = frame.take(out.size());
        f.grad(x, gf);
        g.grad(x, gg);
        const double fv = f.value(x);
        const double gv = g.value(x);
        for (std::size_t h = 0; h < out.size(); ++h) out[h] = gf[h] * gv + fv * gg[h];
    };
    if (f.hess_diag && g.hess_diag) {
        p.hess_diag = [f, g](ConstSpan x, MutSpan out) {
            const std::size_t n = out.size();
            ScratchFrame frame;
            auto gf = frame.take(n);
            auto gg = frame.take(n);
            auto hf = frame.take(n);
            auto hg = frame.take(n);
            f.grad(x, gf);
            g.grad(x, gg);
            f.hess_diag(x, hf);
            g.hess_diag(x, hg);
            const double fv = f.value(x);
            const double gv = g.value(x);
            for (std::size_t h = 0; h < n; ++h) out[h] = hf[h] * gv + 2.0 * gf[h] * gg[h] + fv * hg[h];
        };
    }
    return p;
}

CylFunction linear_combination(double a, const CylFunction& f, double b, const CylFunction& g) {
    if (f.dim != g.dim) throw DimensionMismatch("linear_combination: operand dimensions differ");
    CylFunction p;
    p.id = std::to_string(a) + "*" + f.id + "+" + std::to_string(b) + "*" + g.id;
    p.dim = f.dim;
    p.bounded = f.bounded && g.bounded;
    p.value = [=](ConstSpan x) { return a * f.value(x) + b * g.value(x); };
    p.grad = [=](ConstSpan x, MutSpan out) {
        ScratchFrame frame;
        auto gg = frame.take(out.size());
        f.grad(x, out);
        g.grad(x, gg);
        for (std::size_t h = 0; h < out.size(); ++h) out[h] = a * out[h] + b * gg[h];
    };
    if (f.hess_diag && g.hess_diag) {
        p.hess_diag = [=](ConstSpan x, MutSpan out) {
            ScratchFrame frame;
            auto hg = frame.take(out.size());
            f.hess_diag(x, out);
            g.hess_diag(x, hg);
            for (std::size_t h = 0; h < out.size(); ++h) out[h] = a * out[h] + b * hg[h];
        };
    }
    return p;
}

CylFunction compose(std::function<double(double)> outer, std::function<double(double)> d_outer,
                    std::function<double(double)> dd_outer, const CylFunction& f, std::string id) {
    CylFunction p;
    p.id = std::move(id);
    p.dim = f.dim;
    p.value = [=](ConstSpan x) { return outer(f.value(x)); };
    p.grad = [=](ConstSpan x, MutSpan out) {
        f.grad(x, out);
        const double k = d_outer(f.value(x));
        for (auto& v : out) v *= k;
    };
    if (dd_outer && f.hess_diag) {
        p.hess_diag = [=](ConstSpan x, MutSpan out) {
            ScratchFrame frame;
            auto g = frame.take(out.size());
            f.grad(x, g);
            f.hess_diag(x, out);
            const double v = f.value(x);
            const double k1 = d_outer(v);
            const double k2 = dd_outer(v);
            for (std::size_t h = 0; h < out.size(); ++h) out[h] = k2 * g[h] * g[h] + k1 * out[h];
        };
    }
    return p;
}

std::vector<CylFunction> standard_battery(std::size_t dim, std::uint64_t seed) {
    RandomStream rng(seed, 0xBA77E27ULL);
    auto random_form = [&] {
        std::vector<double> a(dim);
        for (auto& v : a) v = rng.normal() / std::sqrt(static_cast<double>(std::min<std::size_t>(dim, 4)));
        return a;
    };
    std::vector<CylFunction> battery;
    battery.push_back(constant(dim, 1.0));
    battery.push_back(constant(dim, -2.5));
    battery.push_back(coordinate(dim, 0));
    if (dim > 1) battery.push_back(coordinate(dim, 1));
    battery.push_back(sin_linear(random_form(), "sin_a1"));
    battery.push_back(cos_linear(random_form(), "cos_a2"));
    battery.push_back(product(sin_linear(random_form(), "sin_a3"), cos_linear(random_form(), "cos_a4")));
    battery.push_back(norm2_saturated(dim));
    battery.push_back(product(coordinate(dim, 0), cos_linear(random_form(), "cos_a5")));
    return battery;
}

double gradient_fd_error(const CylFunction& f, const ProductLaw& law, std::size_t probes, std::uint64_t seed) {
    const SampleBatch batch = sample_product(law, probes, seed);
    std::vector<double> g(f.dim);
    std::vector<double> x(f.dim);
    double worst = 0.0;
    for (std::size_t i = 0; i < probes; ++i) {
        const auto row = batch.row(i);
        std::copy(row.begin(), row.end(), x.begin());
        f.grad(x, g);
        for (std::size_t h = 0; h < f.dim; ++h) {
            const double step = 1e-5 * (1.0 + std::abs(x[h]));
            const double keep = x[h];
            x[h] = keep + step;
            const double up = f.value(x);
            x[h] = keep - step;
            const double down = f.value(x);
            x[h] = keep;
            const double fd = (up - down) / (2.0 * step);
            const double err = std::abs(fd - g[h]) / std::max(1.0, std::abs(g[h]));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace cyl

OperatorContext::OperatorContext(ProductLaw l) : law(std::move(l)) {
    b1 = moment_coefficient(law.m(), 1.0);
    q_diag = covariance_diag(law);
    r_diag.resize(q_diag.size());
    score_scale.resize(q_diag.size());
    for (std::size_t h = 0; h < q_diag.size(); ++h) {
        r_diag[h] = std::sqrt(q_diag[h]);
        score_scale[h] = 1.0 / law.weight(h);
    }
}

double OperatorContext::score(std::size_t h, double xh) const {
    const int m = law.m();
    double p = xh;
    if (m > 1) {
        const double sq = xh * xh;
        double pw = 1.0;
        for (int k = 1; k < m; ++k) pw *= sq;
        p = pw * xh;
    }
    return p * score_scale[h];
}

double OperatorContext::trace_q() const { return std::accumulate(q_diag.begin(), q_diag.end(), 0.0); }

void apply_M(const OperatorContext& ctx, const CylFunction& phi, ConstSpan x, MutSpan out) {
    if (phi.dim != ctx.dim() || x.size() != ctx.dim() || out.size() != ctx.dim())
        throw DimensionMismatch("apply_M: function, point and law dimensions must agree");
    phi.grad(x, out);
    for (std::size_t h = 0; h < out.size(); ++h) out[h] *= ctx.r_diag[h];
}

std::vector<double> apply_M(const OperatorContext& ctx, const CylFunction& phi, ConstSpan x) {
    std::vector<double> out(ctx.dim());
    apply_M(ctx, phi, x, out);
    return out;
}

double white_noise(const OperatorContext& ctx, ConstSpan z, ConstSpan x) {
    if (z.size() != ctx.dim() || x.size() != ctx.dim()) throw DimensionMismatch("white_noise: dimension mismatch");
    // b^{1/2} mu^{1/(2m)-1} = r_h / mu_h
    double s = 0.0;
    for (std::size_t h = 0; h < ctx.dim(); ++h) s += ctx.r_diag[h] * ctx.score(h, x[h]) * z[h];
    return s;
}

std::string to_string(SphereDivReading r) {
    return r == SphereDivReading::QxSquared ? "|Qx|^2" : "|Q^2x|^2";
}

VectorField constant_field(const OperatorContext& ctx, std::vector<double> z) {
    if (z.size() != ctx.dim()) throw DimensionMismatch("constant_field: dimension mismatch");
    VectorField F;
    F.id = "constant";
    F.dim = z.size();
    F.eval = [z](ConstSpan, MutSpan out) { std::copy(z.begin(), z.end(), out.begin()); };
    F.divergence = [ctx, z](ConstSpan x) { return white_noise(ctx, z, x); };
    return F;
}

VectorField sphere_field(const OperatorContext& ctx, SphereDivReading reading) {
    VectorField F;
    F.id = reading == SphereDivReading::QxSquared ? "sphere" : "sphere[Q2x]";
    F.dim = ctx.dim();
    const std::vector<double> r = ctx.r_diag;
    const std::vector<double> q = ctx.q_diag;
    auto norm_sq = [q](ConstSpan x) {
        double s = 0.0;
        for (std::size_t h = 0; h < q.size(); ++h) s += q[h] * x[h] * x[h];
        if (s < kSphereSingularity) throw Singularity("sphere field: |Q^{1/2}x|^2 vanishes at the probe point");
        return s;
    };
    F.eval = [r, norm_sq](ConstSpan x, MutSpan out) {
        const double s = norm_sq(x);
        for (std::size_t h = 0; h < r.size(); ++h) out[h] = r[h] * x[h] / (2.0 * s);
    };
    const double tr = ctx.trace_q();
    const double b1 = ctx.b1;
    const int m = ctx.m();
    std::vector<double> mu_pow(ctx.dim());
    for (std::size_t h = 0; h < ctx.dim(); ++h) mu_pow[h] = std::pow(ctx.law.weight(h), 1.0 / m - 1.0);
    F.divergence = [=](ConstSpan x) {
        const double s = norm_sq(x);
        double second = 0.0;
        double tail = 0.0;
        for (std::size_t h = 0; h < q.size(); ++h) {
            const double qq = reading == SphereDivReading::QxSquared ? q[h] * q[h] : q[h] * q[h] * q[h] * q[h];
            second += qq * x[h] * x[h];
            tail += mu_pow[h] * ipow(x[h] * x[h], m);
        }
        return 0.5 * (-tr / s + 2.0 * second / (s * s)) + b1 * tail / (2.0 * s);
    };
    return F;
}

VectorField hyperplane_field(const OperatorContext& ctx, std::vector<double> b) {
    if (b.size() != ctx.dim()) throw DimensionMismatch("hyperplane_field: dimension mismatch");
    std::vector<double> rb(b.size());
    double norm_sq = 0.0;
    for (std::size_t h = 0; h < b.size(); ++h) {
        rb[h] = ctx.r_diag[h] * b[h];
        norm_sq += rb[h] * rb[h];
    }
    if (!(norm_sq > 0.0)) throw PreconditionError("hyperplane_field: b = 0 gives a degenerate level function");
    VectorField F;
    F.id = "hyperplane";
    F.dim = b.size();
    std::vector<double> psi(rb);
    for (auto& v : psi) v /= norm_sq;
    F.eval = [psi](ConstSpan, MutSpan out) { std::copy(psi.begin(), psi.end(), out.begin()); };
    F.divergence = [ctx, rb, norm_sq](ConstSpan x) { return white_noise(ctx, rb, x) / norm_sq; };
    return F;
}

VectorField scaled_field(const OperatorContext& ctx, const CylFunction& psi, const VectorField& F) {
    if (psi.dim != F.dim) throw DimensionMismatch("scaled_field: dimension mismatch");
    VectorField out;
    out.id = psi.id + "." + F.id;
    out.dim = F.dim;
    out.eval = [psi, F](ConstSpan x, MutSpan v) {
        F.eval(x, v);
        const double s = psi.value(x);
        for (auto& c : v) c *= s;
    };
    if (F.divergence) {
        out.divergence = [ctx, psi, F](ConstSpan x) {
            const std::size_t n = x.size();
            ScratchFrame frame;
            auto f = frame.take(n);
            auto g = frame.take(n);
            F.eval(x, f);
            apply_M(ctx, psi, x, g);
            double inner = 0.0;
            for (std::size_t h = 0; h < n; ++h) inner += g[h] * f[h];
            return psi.value(x) * F.divergence(x) - inner;
        };
    }
    return out;
}

VectorField negated_field(const VectorField& F) {
    VectorField out;
    out.id = "-" + F.id;
    out.dim = F.dim;
    out.eval = [F](ConstSpan x, MutSpan v) {
        F.eval(x, v);
        for (auto& c : v) c = -c;
    };
    if (F.divergence) out.divergence = [F](ConstSpan x) { return -F.divergence(x); };
    return out;
}

std::function<double(ConstSpan)> divergence_from_jacobian(const OperatorContext& ctx,
                                                          std::function<void(ConstSpan, MutSpan)> eval,
                                                          std::function<void(ConstSpan, MutSpan)> jac_diag) {
    return [ctx, eval, jac_diag](ConstSpan x) {
        const std::size_t n = x.size();
        ScratchFrame frame;
        auto f = frame.take(n);
        auto d = frame.take(n);
        eval(x, f);
        jac_diag(x, d);
        double s = 0.0;
        for (std::size_t h = 0; h < n; ++h) s += ctx.r_diag[h] * (f[h] * ctx.score(h, x[h]) - d[h]);
        return s;
    };
}

McEstimate ibp_residual(const OperatorContext& ctx, const CylFunction& phi, ConstSpan z, const SampleBatch& batch) {
    if (z.size() != ctx.dim() || batch.dim != ctx.dim()) throw DimensionMismatch("ibp_residual: dimension mismatch");
    const std::vector<double> zz(z.begin(), z.end());
    return batch_mean(batch, [&](ConstSpan x) {
        ScratchFrame frame;
        auto g = frame.take(x.size());
        apply_M(ctx, phi, x, g);
        double inner = 0.0;
        for (std::size_t h = 0; h < x.size(); ++h) inner += g[h] * zz[h];
        return inner - white_noise(ctx, zz, x) * phi.value(x);
    });
}

McEstimate divergence_residual(const OperatorContext& ctx, const VectorField& F, const CylFunction& phi,
                               const SampleBatch& batch) {
    if (!F.divergence) throw ValidationRequired("divergence_residual: field '" + F.id + "' has no candidate divergence");
    if (F.dim != ctx.dim() || batch.dim != ctx.dim()) throw DimensionMismatch("divergence_residual: dimension mismatch");
    return batch_mean(batch, [&](ConstSpan x) {
        ScratchFrame frame;
        auto g = frame.take(x.size());
        auto f = frame.take(x.size());
        apply_M(ctx, phi, x, g);
        F.eval(x, f);
        double inner = 0.0;
        for (std::size_t h = 0; h < x.size(); ++h) inner += g[h] * f[h];
        return inner - phi.value(x) * F.divergence(x);
    });
}

double generator_apply(const OperatorContext& ctx, const CylFunction& phi, ConstSpan x) {
    if (!phi.hess_diag) throw PreconditionError("generator_apply: '" + phi.id + "' has no Hessian diagonal");
    if (phi.dim != ctx.dim() || x.size() != ctx.dim()) throw DimensionMismatch("generator_apply: dimension mismatch");
    ScratchFrame frame;
    auto g = frame.take(x.size());
    auto hd = frame.take(x.size());
    phi.grad(x, g);
    phi.hess_diag(x, hd);
    double s = 0.0;
    for (std::size_t h = 0; h < x.size(); ++h) s += 0.5 * hd[h] - 0.5 * ctx.score(h, x[h]) * g[h];
    return s;
}

McEstimate generator_mean(const OperatorContext& ctx, const CylFunction& phi, const SampleBatch& batch) {
    return batch_mean(batch, [&](ConstSpan x) { return generator_apply(ctx, phi, x); });
}

FieldCertificate certify_field(const OperatorContext& ctx, const VectorField& F, const std::vector<CylFunction>& battery,
                               const SampleBatch& batch, const TolerancePolicy& policy) {
    if (!F.divergence) throw ValidationRequired("certify_field: field '" + F.id + "' has no candidate divergence");
    FieldCertificate cert;
    cert.field_id = F.id;
    cert.certified = true;
    for (const auto& phi : battery) {
        ResidualRecord rec{"divergence", phi.id, F.id, divergence_residual(ctx, F, phi, batch), false};
        rec.pass = policy.accepts(rec.estimate);
        cert.certified = cert.certified && rec.pass;
        cert.records.push_back(std::move(rec));
    }
    cert.divergence_mean = batch_mean(batch, [&](ConstSpan x) { return F.divergence(x); });
    cert.certified = cert.certified && cert.divergence_mean.within(policy.se_multiplier);
    return cert;
}

}  // namespace surfmeas

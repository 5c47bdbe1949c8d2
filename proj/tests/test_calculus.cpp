#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "surfmeas/calculus.hpp"
#include "surfmeas/errors.hpp"
#include "surfmeas/oracle.hpp"

using namespace surfmeas;

namespace {

OperatorContext make_ctx(int m, std::size_t n) { return OperatorContext(ProductLaw::power_weights(m, n, 1.0, 1.5 * m)); }

std::vector<double> probe_point(std::size_t n, std::uint64_t seed) {
    RandomStream rng(seed, 1);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    return x;
}

}  // namespace

TEST_CASE("battery gradients match finite differences") {
    const auto law = ProductLaw::power_weights(2, 6, 1.0, 3.0);
    for (const auto& f : cyl::standard_battery(6, 5)) {
        INFO(f.id);
        CHECK(cyl::gradient_fd_error(f, law, 200, 17) < 1e-6);
    }
    CHECK(cyl::gradient_fd_error(cyl::gaussian_bump({0.5, -0.2, 0.0}, 0.7), ProductLaw(1, {1, 1, 1}), 200, 3) < 1e-6);
}

TEST_CASE("product and chain rules hold pointwise") {
    const auto ctx = make_ctx(2, 5);
    const auto f = cyl::sin_linear({0.3, -0.7, 0.2, 0.1, 0.5});
    const auto g = cyl::norm2_saturated(5);
    const auto fg = cyl::product(f, g);
    const auto ef = cyl::compose([](double t) { return std::exp(t); }, [](double t) { return std::exp(t); },
                                 [](double t) { return std::exp(t); }, f, "exp(f)");
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto x = probe_point(5, s);
        const auto mf = apply_M(ctx, f, x);
        const auto mg = apply_M(ctx, g, x);
        const auto mfg = apply_M(ctx, fg, x);
        const auto mef = apply_M(ctx, ef, x);
        for (std::size_t h = 0; h < 5; ++h) {
            CHECK(mfg[h] == doctest::Approx(f.value(x) * mg[h] + g.value(x) * mf[h]).epsilon(1e-12));
            CHECK(mef[h] == doctest::Approx(std::exp(f.value(x)) * mf[h]).epsilon(1e-12));
        }
    }
}

TEST_CASE("positive part and clipped chain rule off the kink set") {
    const auto ctx = make_ctx(1, 3);
    const auto f = cyl::sin_linear({1.1, -0.4, 0.8});
    const auto pos = cyl::compose([](double t) { return std::max(t, 0.0); }, [](double t) { return t > 0 ? 1.0 : 0.0; },
                                  [](double) { return 0.0; }, f, "f+");
    const double lo = -0.3, hi = 0.4;
    const auto clip = cyl::compose([=](double t) { return std::clamp(t, lo, hi); },
                                   [=](double t) { return (t > lo && t < hi) ? 1.0 : 0.0; },
                                   [](double) { return 0.0; }, f, "clip(f)");
    int checked = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto x = probe_point(3, s);
        const double v = f.value(x);
        if (std::abs(v) < 1e-9 || std::abs(v - lo) < 1e-9 || std::abs(v - hi) < 1e-9) continue;
        const auto mf = apply_M(ctx, f, x);
        const auto mp = apply_M(ctx, pos, x);
        const auto mc = apply_M(ctx, clip, x);
        for (std::size_t h = 0; h < 3; ++h) {
            CHECK(mp[h] == (v > 0 ? mf[h] : 0.0));
            CHECK(mc[h] == ((v > lo && v < hi) ? mf[h] : 0.0));
        }
        ++checked;
    }
    CHECK(checked > 150);
}

TEST_CASE("white noise closed forms") {
    // m = 1: W_z(x) = sum z_h x_h / sqrt(mu_h)
    const OperatorContext g(ProductLaw(1, {2.0, 0.5, 1.0}));
    const std::vector<double> z{0.3, -1.0, 2.0};
    const std::vector<double> x{1.5, 0.2, -0.7};
    const double expect = 0.3 * 1.5 / std::sqrt(2.0) - 1.0 * 0.2 / std::sqrt(0.5) + 2.0 * -0.7;
    CHECK(white_noise(g, z, x) == doctest::Approx(expect).epsilon(1e-14));
    // m = 2: b_{2,1}^{1/2} mu^{-1/2} x^3 z in one coordinate
    const OperatorContext q(ProductLaw(2, {0.25}));
    const double w = white_noise(q, std::vector<double>{1.0}, std::vector<double>{1.2});
    CHECK(w == doctest::Approx(std::sqrt(0.675978240067284728995) * std::pow(0.25, -0.75) * 1.2 * 1.2 * 1.2).epsilon(1e-13));
    CHECK_THROWS_AS(white_noise(g, std::vector<double>{1.0}, x), DimensionMismatch);
}

TEST_CASE("whole-space integration by parts") {
    for (int m : {1, 2}) {
        const auto ctx = make_ctx(m, 6);
        const auto batch = sample_product(ctx.law, 200000, 41 + m);
        RandomStream rng(9, 0);
        for (const auto& phi : cyl::standard_battery(6, 2)) {
            std::vector<double> z(6);
            for (auto& v : z) v = rng.normal();
            const auto e = ibp_residual(ctx, phi, z, batch);
            INFO(m, " ", phi.id, " ", e.value, " +- ", e.std_error);
            CHECK(e.within(4.0));
        }
    }
}

TEST_CASE("one-dimensional integration by parts by quadrature") {
    for (int m : {1, 2, 3}) {
        const OperatorContext ctx(ProductLaw(m, {0.8}));
        for (const auto& phi : {cyl::sin_linear({0.9}), cyl::cos_linear({1.3}), cyl::norm2_saturated(1)}) {
            const auto q = oracle::ibp_identity_1d(ctx, phi, 1.7);
            INFO(m, " ", phi.id);
            CHECK(std::abs(q.lhs - q.rhs) <= 1e-8 * std::max(1.0, std::abs(q.lhs)));
        }
    }
}

TEST_CASE("sphere divergence agrees with the Jacobian assembly") {
    for (int m : {1, 2, 3}) {
        const auto ctx = make_ctx(m, 4);
        const auto F = sphere_field(ctx, SphereDivReading::QxSquared);
        const auto wrong = sphere_field(ctx, SphereDivReading::Q2xSquared);
        const auto r = ctx.r_diag;
        const auto q = ctx.q_diag;
        auto S = [q](ConstSpan x) {
            double s = 0.0;
            for (std::size_t h = 0; h < q.size(); ++h) s += q[h] * x[h] * x[h];
            return s;
        };
        const auto div = divergence_from_jacobian(ctx, F.eval, [=](ConstSpan x, MutSpan out) {
            const double s = S(x);
            for (std::size_t h = 0; h < r.size(); ++h)
                out[h] = r[h] / (2.0 * s) - r[h] * q[h] * x[h] * x[h] / (s * s);
        });
        double worst_wrong = 0.0;
        for (std::uint64_t k = 0; k < 50; ++k) {
            const auto x = probe_point(4, 100 + k);
            CHECK(F.divergence(x) == doctest::Approx(div(x)).epsilon(1e-11));
            worst_wrong = std::max(worst_wrong, std::abs(wrong.divergence(x) - div(x)));
        }
        CHECK(worst_wrong > 1e-3);
    }
}

TEST_CASE("hyperplane divergence closed form") {
    const OperatorContext ctx(ProductLaw(1, {1.0, 0.5}));
    const auto F = hyperplane_field(ctx, {1.0, 2.0});
    // rb = (1, sqrt(2)), |rb|^2 = 3, W_{rb}(x) = x1 + 2 x2
    const std::vector<double> x{0.4, -1.1};
    CHECK(F.divergence(x) == doctest::Approx((0.4 + 2.0 * -1.1) / 3.0).epsilon(1e-14));
    std::vector<double> f(2);
    F.eval(x, f);
    CHECK(f[0] == doctest::Approx(1.0 / 3.0));
    CHECK(f[1] == doctest::Approx(std::sqrt(2.0) / 3.0));
    CHECK_THROWS_AS(hyperplane_field(ctx, {0.0, 0.0}), PreconditionError);
}

TEST_CASE("field certification") {
    const auto ctx = make_ctx(2, 8);
    const auto batch = sample_product(ctx.law, 200000, 77);
    const auto battery = cyl::standard_battery(8, 4);
    const TolerancePolicy policy{4.0, 5e-2};
    std::vector<double> b(8, 0.0);
    b[0] = 1.0;
    b[3] = -0.5;
    CHECK(certify_field(ctx, sphere_field(ctx), battery, batch, policy).certified);
    CHECK(certify_field(ctx, hyperplane_field(ctx, b), battery, batch, policy).certified);
    CHECK(certify_field(ctx, constant_field(ctx, b), battery, batch, policy).certified);
    const auto modulated = scaled_field(ctx, cyl::cos_linear({0.5, 0.2, 0, 0, 0, 0, 0, 0.1}), constant_field(ctx, b));
    CHECK(certify_field(ctx, modulated, battery, batch, policy).certified);

    // A field whose claimed divergence is off by a constant is rejected.
    auto broken = hyperplane_field(ctx, b);
    const auto div = broken.divergence;
    broken.divergence = [div](ConstSpan x) { return div(x) + 0.05; };
    CHECK_FALSE(certify_field(ctx, broken, battery, batch, policy).certified);

    VectorField bare = constant_field(ctx, b);
    bare.divergence = nullptr;
    CHECK_THROWS_AS(certify_field(ctx, bare, battery, batch, policy), ValidationRequired);
}

TEST_CASE("sphere field singularity") {
    const auto ctx = make_ctx(1, 3);
    const auto F = sphere_field(ctx);
    const std::vector<double> zero(3, 0.0);
    std::vector<double> out(3);
    CHECK_THROWS_AS(F.eval(zero, out), Singularity);
    CHECK_THROWS_AS(F.divergence(zero), Singularity);
}

TEST_CASE("generator") {
    const OperatorContext ctx(ProductLaw(1, {0.7, 1.3}));
    const auto x1sq = cyl::product(cyl::coordinate(2, 0), cyl::coordinate(2, 0));
    const std::vector<double> x{0.9, -0.4};
    CHECK(generator_apply(ctx, x1sq, x) == doctest::Approx(1.0 - 0.81 / 0.7).epsilon(1e-14));
    CHECK(generator_apply(ctx, cyl::constant(2, 3.0), x) == 0.0);
    for (int m : {1, 2}) {
        const auto c = make_ctx(m, 4);
        const auto batch = sample_product(c.law, 200000, 5 + m);
        for (const auto& phi : cyl::standard_battery(4, 8)) {
            const auto e = generator_mean(c, phi, batch);
            INFO(m, " ", phi.id, " ", e.value, " +- ", e.std_error);
            CHECK(e.within(4.0));
        }
    }
    CylFunction no_hessian = cyl::coordinate(2, 0);
    no_hessian.hess_diag = nullptr;
    CHECK_THROWS_AS(generator_apply(ctx, no_hessian, x), PreconditionError);
}

TEST_CASE("estimates do not depend on the worker count") {
    const auto ctx = make_ctx(2, 6);
    const auto batch = sample_product(ctx.law, 50000, 3);
    const auto phi = cyl::standard_battery(6, 1)[6];
    const std::vector<double> z{1, 0, -1, 0.5, 0, 0};
    set_worker_count(1);
    const auto a = ibp_residual(ctx, phi, z, batch);
    set_worker_count(4);
    const auto b = ibp_residual(ctx, phi, z, batch);
    set_worker_count(1);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
}

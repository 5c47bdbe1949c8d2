// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when a criterion fails for a reason not listed as a known limitation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "surfmeas/calculus.hpp"
#include "surfmeas/dynamics.hpp"
#include "surfmeas/fejer.hpp"
#include "surfmeas/harness.hpp"
#include "surfmeas/measure.hpp"
#include "surfmeas/oracle.hpp"
#include "surfmeas/parallel.hpp"
#include "surfmeas/quadrature.hpp"
#include "surfmeas/sampler.hpp"
#include "surfmeas/surface.hpp"

using namespace surfmeas;

namespace {

// Pinned tolerances.
constexpr double kSe = 4.0;                 // statistical pass rule, |estimate| <= kSe * SE
constexpr double kMomentQuadRel = 1e-8;
constexpr double kIbpQuadRel = 1e-8;
constexpr double kDivQuadRel = 1e-6;
constexpr double kHyperplaneRel = 0.01;
constexpr double kSphereRel = 0.02;
constexpr double kBiasConstant = 1.5;       // invariance allowance kSe * SE + kBiasConstant * dt
constexpr double kRatioLo = 1.5;
constexpr double kRatioHi = 2.5;
constexpr double kKsLevel = 1e-3;
constexpr double kOdeTol = 1e-8;
constexpr double kKernelMass = 1e-10;
constexpr double kCosFactor = 1e-12;
constexpr double kFejerPointwise = 1e-3;
constexpr std::uint64_t kSeed = 2024;
constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string known;  // non-empty when the only failures are documented limitations
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back("failed: " + what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double a) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

OperatorContext power_context(int m, std::size_t n) { return OperatorContext(ProductLaw::power_weights(m, n, 1.0, 1.5 * m)); }

std::vector<double> b_vector(std::size_t n) {
    std::vector<double> b(n, 0.0);
    b[0] = 1.0;
    if (n > 1) b[1] = -0.5;
    if (n > 2) b[2] = 0.25;
    return b;
}

LevelFunction certified(const OperatorContext& ctx, LevelKind kind, const SampleBatch& batch) {
    LevelFunction lf = kind == LevelKind::Sphere ? sphere_level(ctx) : hyperplane_level(ctx, b_vector(ctx.dim()));
    const auto cert = certify_level(ctx, lf, cyl::standard_battery(ctx.dim(), 4), batch, TolerancePolicy{kSe, 5e-2});
    if (!cert.certified) throw ValidationRequired("certification failed for " + to_string(kind));
    return lf;
}

// 1. Moment identities.
Outcome moments() {
    Outcome o;
    double worst_z = 0.0, worst_q = 0.0;
    for (int m : {1, 2, 3})
        for (double mu : {0.5, 1.0, 2.0}) {
            const ProductLaw law(m, {mu});
            const auto batch = sample_product(law, 1000000, kSeed + static_cast<std::uint64_t>(10 * m + 4 * mu));
            const auto est = batch_means<3>(batch, [](ConstSpan x) {
                const double s = x[0] * x[0];
                return std::array<double, 3>{s, s * s, s * s * s};
            });
            const OneDimLaw one(m, mu);
            for (int N = 1; N <= 3; ++N) {
                const double exact = moment(m, mu, N);
                const auto& e = est[static_cast<std::size_t>(N - 1)];
                const double z = std::abs(e.value - exact) / e.std_error;
                worst_z = std::max(worst_z, z);
                o.check(z <= kSe, fmt("sample moment m=%g mu=%g", m, mu) + fmt(" N=%g z=%.2f", N, z));
                const double q = quad::integrate_real_line([&](double x) { return std::pow(x * x, N) * one.density(x); }, 1e-14);
                const double rel = std::abs(q / exact - 1.0);
                worst_q = std::max(worst_q, rel);
                o.check(rel <= kMomentQuadRel, fmt("quadrature moment m=%g N=%g", m, N));
            }
        }
    o.note(fmt("largest |z| = %.2f over 27 sample moments; largest quadrature relative error %.1e", worst_z, worst_q));
    return o;
}

// 2. Whole-space integration by parts.
Outcome whole_space_ibp() {
    Outcome o;
    for (int m : {1, 2}) {
        const auto ctx = power_context(m, 16);
        const auto batch = sample_product(ctx.law, 1000000, kSeed + m);
        const auto battery = cyl::standard_battery(16, kSeed);
        RandomStream rng(kSeed, 0x12);
        std::vector<double> z1(16, 0.0), z2(16);
        z1[0] = 1.0;
        for (auto& v : z2) v = rng.normal() / 4.0;
        double worst = 0.0;
        for (std::size_t i = 0; i < 12; ++i) {
            const auto& phi = battery[i % battery.size()];
            const auto e = ibp_residual(ctx, phi, i < battery.size() ? z1 : z2, batch);
            worst = std::max(worst, std::abs(e.value) / e.std_error);
            o.check(std::abs(e.value) <= kSe * e.std_error, "m=" + std::to_string(m) + " " + phi.id);
        }
        o.note(fmt("n=16 m=%g: largest |residual|/SE = %.2f over 12 pairs", m, worst));
    }
    for (int m : {1, 2, 3}) {
        const OperatorContext ctx(ProductLaw(m, {0.7}));
        double worst = 0.0;
        for (const auto& phi : cyl::standard_battery(1, kSeed)) {
            const auto q = oracle::ibp_identity_1d(ctx, phi, 1.0);
            worst = std::max(worst, q.relative_gap());
            o.check(q.relative_gap() <= kIbpQuadRel, "n=1 quadrature m=" + std::to_string(m) + " " + phi.id);
        }
        o.note(fmt("n=1 m=%g: largest quadrature relative gap %.1e", m, worst));
    }
    return o;
}

// 3. Divergence formulas for the two fields.
Outcome divergence_formulas() {
    Outcome o;
    for (int m : {1, 2}) {
        const auto ctx = power_context(m, 16);
        const auto batch = sample_product(ctx.law, 1000000, kSeed + 30 + m);
        const auto battery = cyl::standard_battery(16, 4);
        for (auto kind : {LevelKind::Sphere, LevelKind::Hyperplane}) {
            const VectorField F = kind == LevelKind::Sphere ? sphere_field(ctx) : hyperplane_field(ctx, b_vector(16));
            double worst = 0.0;
            for (const auto& phi : battery) {
                const auto e = divergence_residual(ctx, F, phi, batch);
                worst = std::max(worst, std::abs(e.value) / e.std_error);
                o.check(std::abs(e.value) <= kSe * e.std_error, "n=16 m=" + std::to_string(m) + " " + F.id + " " + phi.id);
            }
            o.note(fmt("n=16 m=%g ", m) + to_string(kind) + fmt(": largest |residual|/SE = %.2f", worst));
        }
    }
    // n = 2: deterministic identity, with the point term of the sphere field at the origin
    std::vector<std::string> verdict;
    for (int m : {1, 2}) {
        const auto ctx = power_context(m, 2);
        const auto battery = cyl::standard_battery(2, 4);
        double worst_h = 0.0;
        for (const auto& phi : battery) {
            const auto q = oracle::adjoint_identity(ctx, hyperplane_field(ctx, b_vector(2)), phi);
            worst_h = std::max(worst_h, q.relative_gap());
            o.check(q.relative_gap() <= kDivQuadRel, "n=2 hyperplane quadrature " + phi.id);
        }
        for (auto reading : {SphereDivReading::QxSquared, SphereDivReading::Q2xSquared}) {
            double worst = 0.0;
            for (const auto& phi : battery)
                worst = std::max(worst, oracle::adjoint_identity(ctx, sphere_field(ctx, reading), phi, kPi).relative_gap());
            const bool ok = worst <= kDivQuadRel;
            if (reading == SphereDivReading::QxSquared) o.check(ok, "n=2 sphere quadrature");
            verdict.push_back(fmt("m=%g ", m) + to_string(reading) + (ok ? " consistent" : " inconsistent") +
                              fmt(" (gap %.1e)", worst));
        }
        o.note(fmt("n=2 m=%g hyperplane: largest relative gap %.1e", m, worst_h));
    }
    std::string line = "sphere second term: ";
    for (std::size_t i = 0; i < verdict.size(); ++i) line += (i ? "; " : "") + verdict[i];
    o.note(line);
    o.note("consistent reading: sum_h q_h^2 x_h^2 = |Qx|^2; at n=2 the identity carries the point term -pi p(0) phi(0)");
    return o;
}

// 4. Closed-form surface densities.
Outcome closed_forms() {
    Outcome o;
    {
        const auto ctx = power_context(1, 16);
        const auto batch = sample_product(ctx.law, 1000000, kSeed + 40);
        const auto lf = certified(ctx, LevelKind::Hyperplane, batch);
        double var = 0.0;
        for (std::size_t h = 0; h < 16; ++h) var += lf.b[h] * lf.b[h] * ctx.law.weight(h);
        double worst = 0.0;
        for (double r : quantile_grid(lf, batch)) {
            const auto q = q_divergence(ctx, lf, cyl::constant(16, 1.0), r, batch);
            const double exact = std::exp(-r * r / (2 * var)) / std::sqrt(2 * kPi * var);
            const double rel = std::abs(q.value / exact - 1.0);
            worst = std::max(worst, rel);
            o.check(rel < kHyperplaneRel, fmt("hyperplane r=%.3f rel=%.4f", r, rel));
        }
        o.note(fmt("hyperplane m=1 n=16: largest relative error %.4f over 10 levels", worst));
    }
    {
        const OperatorContext ctx(ProductLaw(1, {1.0, 1.0}));
        const auto batch = sample_product(ctx.law, 1000000, kSeed + 41);
        const auto lf = certified(ctx, LevelKind::Sphere, batch);
        double worst = 0.0;
        for (double r : quantile_grid(lf, batch)) {
            const auto q = q_divergence(ctx, lf, cyl::constant(2, 1.0), r, batch);
            const double rel = std::abs(q.value / (0.5 * std::exp(-r / 2.0)) - 1.0);
            worst = std::max(worst, rel);
            o.check(rel < kSphereRel, fmt("sphere r=%.3f rel=%.4f", r, rel));
        }
        o.note(fmt("sphere m=1 n=2 unit weights: largest relative error %.4f", worst));
    }
    return o;
}

// 5. Divergence representation against smoothed differences.
Outcome cross_method() {
    Outcome o;
    for (auto kind : {LevelKind::Sphere, LevelKind::Hyperplane})
        for (int m : {1, 2}) {
            const auto ctx = power_context(m, 8);
            const auto batch = sample_product(ctx.law, 1000000, kSeed + 50 + m);
            const auto lf = certified(ctx, kind, batch);
            auto sorted = level_values(lf, batch);
            std::sort(sorted.begin(), sorted.end());
            double worst = 0.0;
            for (double r : quantile_grid(lf, batch)) {
                const auto gap = q_method_gap(ctx, lf, cyl::constant(8, 1.0), r, batch, default_bandwidth(sorted, r));
                worst = std::max(worst, std::abs(gap.value) / gap.std_error);
                o.check(gap.within(kSe), to_string(kind) + fmt(" m=%g r=%.3f", m, r));
            }
            o.note(to_string(kind) + fmt(" m=%g: largest |gap|/SE = %.2f", m, worst));
        }
    return o;
}

// 6. Integration by parts on sublevel sets.
Outcome sublevel_ibp() {
    Outcome o;
    for (auto kind : {LevelKind::Sphere, LevelKind::Hyperplane})
        for (int m : {1, 2}) {
            const auto ctx = power_context(m, 8);
            const auto batch = sample_product(ctx.law, 500000, kSeed + 60 + m);
            const auto lf = certified(ctx, kind, batch);
            const auto battery = cyl::standard_battery(8, 6);
            RandomStream rng(kSeed, 0x16);
            std::vector<double> z(8);
            for (auto& v : z) v = rng.normal() / 2.0;
            double worst = 0.0;
            for (double r : quantile_grid(lf, batch, {0.25, 0.5, 0.75}))
                for (const auto& phi : battery) {
                    const auto e = ibp_sublevel_residual(ctx, lf, phi, z, r, batch);
                    worst = std::max(worst, std::abs(e.value) / e.std_error);
                    o.check(e.within(kSe), to_string(kind) + fmt(" m=%g r=%.3f ", m, r) + phi.id);
                }
            // above every sample the identity is the whole-space one
            double far_gap = 0.0;
            for (const auto& phi : battery) {
                const auto far = ibp_sublevel_residual(ctx, lf, phi, z, 1e12, batch);
                const auto whole = ibp_residual(ctx, phi, z, batch);
                far_gap = std::max(far_gap, std::abs(far.value - whole.value) / std::max(whole.std_error, 1e-300));
                o.check(std::abs(far.value - whole.value) <= whole.std_error, "large r " + phi.id);
            }
            o.note(to_string(kind) + fmt(" m=%g: largest |residual|/SE = %.2f; ", m, worst) +
                   fmt("large-r difference from whole space %.1e SE", far_gap));
        }
    return o;
}

// 7. Perimeter variational identity.
Outcome perimeter() {
    Outcome o;
    for (auto kind : {LevelKind::Sphere, LevelKind::Hyperplane})
        for (int m : {1, 2}) {
            const auto ctx = power_context(m, 6);
            const auto batch = sample_product(ctx.law, 500000, kSeed + 70 + m);
            const auto lf = certified(ctx, kind, batch);
            const auto phi = cyl::linear_combination(1.0, cyl::constant(6, 1.0), 0.5,
                                                     cyl::cos_linear({0.5, 0.5, 0.0, 0.3, 0.0, 0.2}));
            const double r = quantile_grid(lf, batch, {0.5})[0];
            const auto rep = perimeter_inequality_check(ctx, lf, phi, r, random_unit_fields(ctx, 20, kSeed), batch, kSe);
            std::size_t ok = 0;
            for (const auto& e : rep.entries) ok += e.pass ? 1 : 0;
            o.check(rep.entries.size() == 22 && ok == rep.entries.size(), to_string(kind) + " inequality");
            o.check(rep.maximizer_equal, to_string(kind) + " equality at -Mg/|Mg|");
            o.check(rep.reversed_strict, to_string(kind) + " strict gap for +Mg/|Mg|");
            o.note(to_string(kind) + fmt(" m=%g: rho = %.4f, ", m, rep.rho.value) +
                   std::to_string(ok) + "/" + std::to_string(rep.entries.size()) + " entries pass");
        }
    return o;
}

// 8. Co-area oracle for weighted Gaussians.
Outcome coarea() {
    Outcome o;
    for (std::size_t n : {2u, 3u}) {
        std::vector<double> var(n, 1.0);
        var[1] = 0.5;
        const OperatorContext ctx(ProductLaw(1, var));
        const auto batch = sample_product(ctx.law, 500000, kSeed + 80 + n);
        std::vector<double> a(n, 0.0);
        a[0] = 0.8;
        a[n - 1] = -0.6;
        const auto u = cyl::linear_combination(0.4, cyl::sin_linear(a), 0.0, cyl::constant(n, 0.0));
        const std::vector<CylFunction> weights{cyl::constant(n, 1.0), oracle::normalized_exp_weight(var, u)};
        std::vector<double> b(n, 1.0);
        b[0] = 0.5;
        for (auto kind : {LevelKind::Sphere, LevelKind::Hyperplane}) {
            LevelFunction lf = kind == LevelKind::Sphere ? sphere_level(ctx) : hyperplane_level(ctx, b);
            certify_level(ctx, lf, cyl::standard_battery(n, 4), batch, TolerancePolicy{kSe, 5e-2});
            o.check(lf.psi_certified, "certification");
            if (!lf.psi_certified) continue;
            for (std::size_t wi = 0; wi < weights.size(); ++wi) {
                const auto& w = weights[wi];
                double worst = 0.0;
                for (double r : quantile_grid(lf, batch, {0.1, 0.3, 0.5, 0.7, 0.9})) {
                    const auto q = q_divergence_weighted(ctx, lf, cyl::constant(n, 1.0), w, r, batch);
                    const double exact = oracle::coarea_oracle(var, [&](ConstSpan x) { return w.value(x); }, kind, b,
                                                               cyl::constant(n, 1.0), r);
                    worst = std::max(worst, std::abs(q.value - exact) / q.std_error);
                    o.check(std::abs(q.value - exact) <= kSe * q.std_error, to_string(kind) + fmt(" n=%g r=%.3f", n, r));
                }
                o.note(fmt("n=%g ", n) + to_string(kind) + (wi ? " exp(2U) weight" : " w=1") +
                       fmt(": largest |q - oracle|/SE = %.2f", worst));
            }
        }
    }
    return o;
}

// 9. Dynamics.
Outcome dynamics() {
    Outcome o;
    for (int m : {1, 2}) {
        const auto law = ProductLaw::power_weights(m, 8, 1.0, 1.5 * m);
        SdeConfig cfg{0.01, 5.0, Scheme::TamedExplicit, 100000, kSeed + m, kDefaultBlockRows};
        const auto x1 = cyl::coordinate(8, 0);
        const std::vector<CylFunction> phis{cyl::product(x1, x1), cyl::norm2_saturated(8),
                                            cyl::cos_linear({0.6, 0.4, -0.2, 0.3, 0.1, 0.0, -0.1, 0.2})};
        const auto res = invariance_residuals(law, phis, {1.0, 5.0}, cfg);
        double worst = 0.0;
        for (std::size_t p = 0; p < phis.size(); ++p)
            for (std::size_t j = 0; j < 2; ++j) {
                const auto& e = res[p][j];
                const double allowance = kSe * e.std_error + kBiasConstant * cfg.dt;
                worst = std::max(worst, std::abs(e.value) / allowance);
                o.check(std::abs(e.value) <= allowance, fmt("invariance m=%g ", m) + phis[p].id);
            }
        o.note(fmt("invariance m=%g dt=0.01: largest |residual|/allowance = %.2f", m, worst));

        SdeConfig rc = cfg;
        rc.dt = 0.05;
        const auto study = dt_refinement(law, cyl::product(x1, x1), 1.0, rc, 3);
        const double ratio = study.diffs[0].value / study.diffs[1].value;
        const bool resolved = std::abs(study.diffs[1].value) > kSe * study.diffs[1].std_error;
        o.check(resolved && ratio >= kRatioLo && ratio <= kRatioHi, fmt("bias ratio m=%g: %.3f", m, ratio));
        o.note(fmt("bias ratio under dt halving (m=%g, dt 0.05 -> 0.025 -> 0.0125): %.3f", m, ratio));

        const double big = std::sqrt(10.0 * law.lambda() / 8.0);
        std::vector<double> t_grid;
        for (int i = 0; i <= 50; ++i) t_grid.push_back(i * 0.1);
        SdeConfig mc = cfg;
        mc.ensemble = 20000;
        for (const auto& x0 : {std::vector<double>(8, 0.0), std::vector<double>(8, 0.5), std::vector<double>(8, big)})
            o.check(moment_bound_check(law, x0, t_grid, mc, kSe).pass, fmt("moment bound m=%g", m));
    }
    o.note("moment bound: 3 starting points x 51 times x m in {1, 2}");
    {
        const auto law = ProductLaw::power_weights(1, 8, 1.0, 1.5);
        SdeConfig ec{0.01, 5.0, Scheme::ExactOu, 100000, kSeed + 9, kDefaultBlockRows};
        const auto start = ensemble_from_batch(sample_product(law, ec.ensemble, ec.seed));
        const auto snap = evolve(start, law, ec, {5.0}).front();
        double lowest = 1.0;
        for (std::size_t h = 0; h < 8; ++h) {
            std::vector<double> col(snap.count);
            for (std::size_t i = 0; i < snap.count; ++i) col[i] = snap.row(i)[h];
            const auto ks = ks_normal(col, law.weight(h));
            lowest = std::min(lowest, ks.p_value);
            o.check(ks.p_value > kKsLevel, fmt("KS coordinate %g", h + 1.0));
        }
        o.note(fmt("exact OU at t=5: smallest KS p-value over 8 coordinates %.3f", lowest));
    }
    {
        RandomStream rng(kSeed, 0x0DE);
        double worst = -1e300;
        for (int k = 0; k < 50; ++k) {
            const double a = 0.1 + 4.9 * rng.uniform();
            const int m = 1 + static_cast<int>(rng.next_u64() % 4);
            const double v0 = 3.0 * rng.uniform() * std::pow(a, -1.0 / m);
            const auto rep = ode_comparison(a, m, v0, 0.01, 10.0, kOdeTol);
            worst = std::max(worst, rep.max_excess);
            o.check(rep.pass, "ODE triple");
        }
        o.note(fmt("ODE: largest excess over the bound %.1e on 50 triples", worst));
    }
    return o;
}

// 10. Fejer approximation.
Outcome fejer() {
    Outcome o;
    for (int N : {0, 1, 8, 32, 128, 512}) {
        o.check(fejer_multiplier(N, 0) == 1.0, "multiplier at k=0");
        const int nodes = 4 * N + 8;
        double s = 0.0;
        for (int i = 0; i < nodes; ++i) s += fejer_kernel_1d(N, 2.0, -1.0 + 2.0 * i / nodes);
        o.check(std::abs(s * 2.0 / nodes - 1.0) <= kKernelMass, fmt("kernel mass N=%g", N));
    }
    RandomStream rng(kSeed, 0xF1);
    double lowest = 1.0;
    for (int i = 0; i < 10000; ++i) lowest = std::min(lowest, fejer_kernel_1d(17, 1.0, rng.uniform() - 0.5));
    o.check(lowest >= 0.0, "kernel positivity");
    auto cos_f = [](std::span<const double> x) { return std::cos(2.0 * kPi * x[0]); };
    double worst_factor = 0.0;
    for (int N : {1, 8, 32, 128}) {
        const auto p = fejer_approximate(sample_grid(cos_f, 1, 1.0, 0.0, static_cast<std::size_t>(2 * N + 2)), N);
        const double err = std::abs(2.0 * p.coefficient(std::vector<int>{1}).real() - (1.0 - 1.0 / (N + 1.0)));
        worst_factor = std::max(worst_factor, err);
        o.check(err <= kCosFactor, fmt("cos factor N=%g", N));
    }
    o.note(fmt("kernel mass and k=0 multiplier exact; cos factor error %.1e", worst_factor));

    struct Member {
        const char* id;
        std::size_t n;
        std::function<double(std::span<const double>)> f;
    };
    const std::vector<Member> battery{
        {"cos(2 pi x)", 1, cos_f},
        {"exp(sin(2 pi x))", 1, [](std::span<const double> x) { return std::exp(std::sin(2.0 * kPi * x[0])); }},
        {"1/(1.5 + cos(2 pi x))", 1, [](std::span<const double> x) { return 1.0 / (1.5 + std::cos(2.0 * kPi * x[0])); }},
        {"cos(2 pi x) cos(2 pi y)", 2,
         [](std::span<const double> x) { return std::cos(2.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]); }},
    };
    bool expanding = false;
    bool threshold_missed = false;
    for (const auto& mem : battery) {
        const std::size_t probes = mem.n == 1 ? 401 : 41;
        double prev = 1e300;
        std::string trail;
        for (int N : {8, 32, 128}) {
            const auto grid = sample_grid(mem.f, mem.n, 1.0, 0.0, static_cast<std::size_t>(std::max(2 * N + 2, 64)));
            const auto p = fejer_approximate(grid, N);
            double err = 0.0, sup_p = 0.0, sup_f = 0.0;
            std::vector<double> x(mem.n);
            std::size_t total = mem.n == 1 ? probes : probes * probes;
            for (std::size_t i = 0; i < total; ++i) {
                x[0] = static_cast<double>(i % probes) / (probes - 1) - 0.5;
                if (mem.n == 2) x[1] = static_cast<double>(i / probes) / (probes - 1) - 0.5;
                const double v = p.value(x);
                err = std::max(err, std::abs(v - mem.f(x)));
                sup_p = std::max(sup_p, std::abs(v));
                sup_f = std::max(sup_f, std::abs(mem.f(x)));
            }
            for (double v : grid.values) sup_f = std::max(sup_f, std::abs(v));
            expanding = expanding || sup_p > sup_f * (1.0 + 1e-12);
            o.check(err < prev, std::string("error not decreasing for ") + mem.id);
            prev = err;
            trail += fmt(" N=%g: %.2e", N, err);
            if (N == 128 && err > kFejerPointwise) threshold_missed = true;
        }
        o.note(std::string(mem.id) + trail);
    }
    o.check(!expanding, "sup-norm non-expansion");
    const auto rep1 = approx_report(separable("cos_gauss", {uni::product(uni::cosine(1.0, 0.0), uni::gaussian(0.7))}), 2,
                                    {3, 5, 7});
    const auto rep2 = approx_report(separable("gauss2", {uni::gaussian(0.8), uni::gaussian(1.1)}), 1, {3, 5});
    o.check(rep1.bounds_hold && rep2.bounds_hold, "derivative bounds");
    o.check(rep1.errors_decreasing && rep2.errors_decreasing, "periodised approximation error decreasing in k");
    double c2 = 0.0;
    for (const auto& b : rep1.entries.front().bounds) c2 = std::max(c2, b.constant);
    o.note(fmt("derivative bounds hold for h=2 (n=1) and h=1 (n=2); largest constant C_alpha at h=2: %.2f", c2));
    if (threshold_missed) {
        if (o.pass) o.known = "Fejer means saturate at O(1/N); at N=128 the error for cos is exactly 1/129 = 7.8e-3 > 1e-3";
        o.pass = false;
        o.notes.push_back("failed: pointwise error below 1e-3 at N=128");
    }
    return o;
}

// 11. Positivity of q_1.
Outcome positivity() {
    Outcome o;
    for (auto kind : {LevelKind::Sphere, LevelKind::Hyperplane})
        for (int m : {1, 2}) {
            const auto ctx = power_context(m, 4);
            const auto batch = sample_product(ctx.law, 200000, kSeed + 110 + m);
            const auto lf = certified(ctx, kind, batch);
            auto grid = quantile_grid(lf, batch, {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99});
            auto g = level_values(lf, batch);
            const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
            grid.push_back(*hi + 0.5);
            grid.push_back(*hi + 5.0);
            grid.push_back(kind == LevelKind::Sphere ? -1.0 : *lo - 0.5);
            const auto rep = q1_positivity_scan(ctx, lf, grid, batch, kSe);
            o.check(rep.pass, to_string(kind) + fmt(" m=%g", m));
            std::size_t inside = 0;
            for (const auto& e : rep.entries) inside += e.inside ? 1 : 0;
            o.note(to_string(kind) + fmt(" m=%g: ", m) + std::to_string(inside) + " levels inside, " +
                   std::to_string(rep.entries.size() - inside) + " outside the sample range");
        }
    return o;
}

// 12. Determinism across worker counts.
Outcome determinism() {
    Outcome o;
    const nlohmann::json cfg_json = {{"measure", {{"m", 2}, {"n", 3}}},
                                     {"batches", {{"count", 30000}, {"seed", 12}}},
                                     {"sde", {{"ensemble", 3000}, {"horizon", 1.0}, {"times", {0.5, 1.0}}, {"ode_triples", 5}}},
                                     {"r_grid", {{"probabilities", {0.25, 0.5, 0.75}}}},
                                     {"fejer", {{"k", {3, 5}}, {"degrees", {8, 32}}}},
                                     {"level_function", {{"kinds", {"hyperplane"}}}}};
    const auto cfg = harness::parse_config(cfg_json);
    auto render = [&](unsigned workers) {
        set_worker_count(workers);
        const auto rep = harness::run(cfg);
        std::string all = rep.to_json().dump(2);
        for (const auto& a : rep.artifacts) all += a.to_csv() + a.to_json().dump(2);
        return all;
    };
    const auto one = render(1);
    const auto four = render(4);
    const auto again = render(1);
    set_worker_count(1);
    o.check(one == four, "worker count changed the output");
    o.check(one == again, "rerun changed the output");
    o.note(fmt("all suites, workers 1 vs 4 vs 1: %g bytes compared", static_cast<double>(one.size())));
    return o;
}

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    Outcome (*body)();
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "moment identities", 30, moments},
        {2, "whole-space integration by parts", 60, whole_space_ibp},
        {3, "divergence formulas", 60, divergence_formulas},
        {4, "surface density closed forms", 60, closed_forms},
        {5, "cross-method agreement", 60, cross_method},
        {6, "sublevel integration by parts", 60, sublevel_ibp},
        {7, "perimeter variational identity", 60, perimeter},
        {8, "co-area oracle", 30, coarea},
        {9, "dynamics: invariance, bias, KS, moments, ODE", 180, dynamics},
        {10, "Fejer approximation", 30, fejer},
        {11, "positivity scan", 30, positivity},
        {12, "determinism", 10, determinism},
    };
    int unexpected = 0;
    const auto t_all = std::chrono::steady_clock::now();
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o.pass = false;
            o.notes.push_back(std::string("error: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            o.pass = false;
            o.known.clear();
            o.notes.push_back(fmt("failed: runtime %.1f s exceeds the %.0f s budget", secs, c.budget_s));
        }
        std::string verdict = o.pass ? "PASS" : (o.known.empty() ? "FAIL" : "FAIL (known: " + o.known + ")");
        if (!o.pass && o.known.empty()) ++unexpected;
        std::printf("[%2d] %-46s %s  (%.1f s)\n", c.id, c.title, verdict.c_str(), secs);
        for (const auto& n : o.notes) std::printf("       %s\n", n.c_str());
        std::fflush(stdout);
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_all).count();
    std::printf("total %.1f s; %d unexpected failure(s)\n", total, unexpected);
    return unexpected == 0 ? 0 : 1;
}

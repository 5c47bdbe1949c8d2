#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "surfmeas/errors.hpp"
#include "surfmeas/fejer.hpp"

using namespace surfmeas;

namespace {

constexpr double kPi = std::numbers::pi;

double kernel_mass(int N, double T) {
    // Trapezoid on a periodic trigonometric polynomial of degree N is exact with > N nodes.
    const int nodes = 4 * N + 8;
    double s = 0.0;
    for (int i = 0; i < nodes; ++i) s += fejer_kernel_1d(N, T, -0.5 * T + T * i / nodes);
    return s * T / nodes;
}

}  // namespace

TEST_CASE("kernel mass, positivity and degree zero") {
    for (int N : {0, 1, 5, 32, 200})
        for (double T : {1.0, 2.5, 7.0}) CHECK(std::abs(kernel_mass(N, T) - 1.0) < 1e-10);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 10000; ++i) CHECK(fejer_kernel_1d(17, 3.0, u(gen)) >= 0.0);
    CHECK(fejer_kernel_1d(0, 4.0, 1.3) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(fejer_kernel_1d(9, 2.0, 0.0) == doctest::Approx(5.0));
    CHECK(fejer_kernel_1d(9, 2.0, 2.0) == doctest::Approx(5.0));
    const std::vector<double> y{0.3, -0.4};
    CHECK(fejer_kernel(4, 2.0, y) == doctest::Approx(fejer_kernel_1d(4, 2.0, 0.3) * fejer_kernel_1d(4, 2.0, -0.4)));
    CHECK_THROWS_AS(fejer_kernel_1d(-1, 1.0, 0.0), PreconditionError);
}

TEST_CASE("cosine damping and constants") {
    for (int N : {1, 4, 16, 128}) {
        const auto grid = sample_grid([](std::span<const double> x) { return std::cos(2.0 * kPi * x[0]); }, 1, 1.0, 0.0,
                                      static_cast<std::size_t>(2 * N + 2));
        const auto p = fejer_approximate(grid, N);
        const double factor = 1.0 - 1.0 / (N + 1.0);
        for (double x : {0.0, 0.13, 0.5, 0.77}) {
            const std::vector<double> xs{x};
            CHECK(std::abs(p.value(xs) - factor * std::cos(2.0 * kPi * x)) < 1e-12);
        }
    }
    const auto c = sample_grid([](std::span<const double>) { return 2.75; }, 2, 3.0, -1.5, 10);
    const auto pc = fejer_approximate(c, 4);
    for (double a : {-1.0, 0.2, 1.4}) {
        const std::vector<double> xs{a, -a / 2};
        CHECK(std::abs(pc.value(xs) - 2.75) < 1e-12);
    }
    CHECK(pc.asymmetry() < 1e-12);
}

TEST_CASE("shifted origin and two variables") {
    auto f = [](std::span<const double> x) { return std::sin(2.0 * kPi * x[0] / 4.0) * std::cos(2.0 * kPi * 2.0 * x[1] / 4.0); };
    const auto g = sample_grid(f, 2, 4.0, -2.0, 16);
    const auto p = fejer_approximate(g, 6);
    const double factor = (1.0 - 1.0 / 7.0) * (1.0 - 2.0 / 7.0);
    for (double a : {-1.7, 0.3, 1.1}) {
        const std::vector<double> xs{a, 0.4 * a};
        CHECK(std::abs(p.value(xs) - factor * f(xs)) < 1e-12);
    }
    const std::vector<int> alpha{1, 1};
    const std::vector<double> xs{0.3, 0.7};
    const double w = 2.0 * kPi / 4.0;
    const double exact = factor * w * std::cos(w * 0.3) * (-2.0 * w) * std::sin(2.0 * w * 0.7);
    CHECK(p.derivative(xs, alpha) == doctest::Approx(exact).epsilon(1e-10));
}

TEST_CASE("sup-norm non-expansion") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        TrigPolynomial src(1, 2.0, 12);
        for (int k = 1; k <= 12; ++k) {
            const std::complex<double> c(u(gen), u(gen));
            src.coefficient(std::vector<int>{k}) = c;
            src.coefficient(std::vector<int>{-k}) = std::conj(c);
        }
        src.coefficient(std::vector<int>{0}) = u(gen);
        for (int N : {3, 8, 20}) {
            const auto p = fejer_approximate(src, N);
            double sup_src = 0.0, sup_p = 0.0;
            for (int i = 0; i < 4000; ++i) {
                const std::vector<double> x{-1.0 + 2.0 * i / 4000.0};
                sup_src = std::max(sup_src, std::abs(src.value(x)));
                sup_p = std::max(sup_p, std::abs(p.value(x)));
            }
            CHECK(sup_p <= sup_src * (1.0 + 1e-3));
        }
    }
    // On samples the discrete convolution is an average, so values stay in range.
    const auto g = sample_grid([](std::span<const double> x) { return std::abs(x[0]) < 0.3 ? 1.0 : -1.0; }, 1, 2.0, -1.0, 64);
    const auto p = fejer_approximate(g, 31);
    for (int i = 0; i < 64; ++i) {
        const std::vector<double> x{-1.0 + 2.0 * i / 64.0};
        CHECK(std::abs(p.value(x)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("under-resolved grids") {
    const auto g = sample_grid([](std::span<const double>) { return 1.0; }, 1, 1.0, 0.0, 9);
    CHECK_THROWS_AS(fejer_approximate(g, 4), UnderResolved);
    CHECK_NOTHROW(fejer_approximate(g, 3));
    CHECK_THROWS_AS(fejer_approximate(g, -1), PreconditionError);
}

TEST_CASE("json round trip") {
    const auto g = sample_grid([](std::span<const double> x) { return std::exp(std::sin(x[0])) + x[1] * x[1]; }, 2, 3.0, -1.5, 12);
    const auto p = fejer_approximate(g, 5);
    const auto q = TrigPolynomial::from_json(nlohmann::json::parse(p.to_json().dump()));
    CHECK(q.degree() == 5);
    CHECK(q.period() == 3.0);
    for (double a : {-1.0, 0.25, 1.3}) {
        const std::vector<double> xs{a, 1.0 - a};
        CHECK(q.value(xs) == p.value(xs));
    }
    auto bad = p.to_json();
    bad["coefficients"][0]["im"] = 5.0;
    CHECK_THROWS_AS(TrigPolynomial::from_json(bad), FormatError);
    CHECK_THROWS_AS(TrigPolynomial::from_json(nlohmann::json{{"n_vars", 1}}), FormatError);
}

TEST_CASE("cutoff shape") {
    for (int h : {0, 1, 2, 3}) {
        const Cutoff c(5, h);
        CHECK(c.eval(0.0, 0) == 1.0);
        CHECK(c.eval(2.0, 0) == 1.0);
        CHECK(c.eval(2.5, 0) == 0.0);
        CHECK(c.eval(-2.25, 0) == doctest::Approx(0.5));
        CHECK(c.sup_derivative(0) == doctest::Approx(1.0));
        // smooth joins: derivatives up to h vanish at both band edges
        for (int j = 1; j <= h; ++j) {
            CHECK(std::abs(c.eval(2.0 + 1e-12, j)) < 1e-6);
            CHECK(std::abs(c.eval(-2.5 + 1e-12, j)) < 1e-6);
            const double fd = (c.eval(2.3 + 1e-6, j - 1) - c.eval(2.3 - 1e-6, j - 1)) / 2e-6;
            CHECK(c.eval(2.3, j) == doctest::Approx(fd).epsilon(1e-5));
        }
        for (int i = 0; i <= 1000; ++i) {
            const double v = c.eval(-3.0 + 6.0 * i / 1000.0, 0);
            CHECK((v >= 0.0 && v <= 1.0));
        }
    }
    CHECK_THROWS_AS(Cutoff(2, 1), PreconditionError);
    CHECK_THROWS_AS(Cutoff(5, 1).eval(2.2, 2), PreconditionError);
}

TEST_CASE("periodization") {
    const auto phi = separable("gauss*cos", {uni::gaussian(0.7), uni::cosine(1.3, 0.2)});
    const auto per = periodize(phi, 5, 2);
    CHECK(per.period == 5.0);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> core(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> x{core(gen), core(gen)};
        for (const std::vector<int>& a : {std::vector<int>{0, 0}, {1, 0}, {1, 1}, {0, 2}}) {
            CHECK(per.derivative(x, a) == doctest::Approx(phi.derivative(x, a)).epsilon(1e-14));
            const std::vector<double> shifted{x[0] + 5.0, x[1] - 10.0};
            CHECK(per.derivative(shifted, a) == doctest::Approx(phi.derivative(x, a)).epsilon(1e-12));
        }
    }
    const Cutoff theta(5, 2);
    const std::vector<int> a{2, 0};
    double norm = 0.0;
    for (int b = 0; b <= 2; ++b)
        for (int j = 0; j <= 400; ++j) {
            const std::vector<double> y{-2.5 + 5.0 * j / 400.0, 0.1};
            norm = std::max(norm, std::abs(phi.derivative(y, std::vector<int>{b, 0})));
        }
    for (int i = 0; i <= 400; ++i) {
        const std::vector<double> x{-2.5 + 5.0 * i / 400.0, 0.1};
        CHECK(std::abs(per.derivative(x, a)) <= derivative_constant(theta, a) * norm);
    }
}

TEST_CASE("univariate derivatives") {
    const std::vector<Univariate> fs{uni::gaussian(0.6), uni::exp_sin(1.7), uni::cosine(2.0, 0.4),
                                     uni::product(uni::linear(0.5, 1.0), uni::exp_sin(0.8))};
    for (const auto& f : fs)
        for (int j = 1; j <= 4; ++j)
            for (double x : {-1.1, 0.0, 0.35, 2.0}) {
                const double e = 1e-5;
                const double fd = (f.eval(x + e, j - 1) - f.eval(x - e, j - 1)) / (2 * e);
                CHECK(f.eval(x, j) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
            }
}

TEST_CASE("approximation report") {
    const auto phi = separable("exp_sin", {uni::exp_sin(1.0)});
    const auto rep = approx_report(phi, 2, {3, 5, 7});
    CHECK(rep.entries.size() == 3);
    CHECK(rep.errors_decreasing);
    CHECK(rep.bounds_hold);
    for (const auto& e : rep.entries) CHECK(e.degree == 8 * e.k * e.k);
    CHECK(rep.entries.back().max_error[0] < rep.entries.front().max_error[0]);

    const auto phi2 = separable("gauss2", {uni::gaussian(0.8), uni::gaussian(1.1)});
    const auto rep2 = approx_report(phi2, 1, {3, 5}, nullptr, 5);
    CHECK(rep2.errors_decreasing);
    CHECK(rep2.bounds_hold);
}

#include "surfmeas/fejer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fftw3.h>

#include "surfmeas/errors.hpp"

namespace surfmeas {

namespace {

constexpr double kPi = std::numbers::pi;

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Visits every multi-index beta with 0 <= beta_j <= bound_j.
template <class Fn>
void for_each_below(std::span<const int> bound, Fn&& fn) {
    std::vector<int> beta(bound.size(), 0);
    for (;;) {
        fn(std::span<const int>(beta));
        std::size_t j = 0;
        while (j < beta.size() && ++beta[j] > bound[j]) beta[j++] = 0;
        if (j == beta.size()) return;
    }
}

double poly_eval(const std::vector<double>& c, double u) {
    double s = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) s = s * u + c[i];
    return s;
}

}  // namespace

namespace uni {

Univariate constant(double c) {
    return {"const", [c](double, int order) { return order == 0 ? c : 0.0; }};
}

Univariate linear(double a, double b) {
    return {"linear", [a, b](double x, int order) { return order == 0 ? a * x + b : (order == 1 ? a : 0.0); }};
}

Univariate cosine(double w, double p) {
    return {"cos", [w, p](double x, int order) { return std::pow(w, order) * std::cos(w * x + p + order * kPi / 2.0); }};
}

Univariate gaussian(double s) {
    return {"gauss", [s](double x, int order) {
                const double y = x / s;
                // d^j/dx^j exp(-y^2/2) = (-1/s)^j He_j(y) exp(-y^2/2)
                double he_prev = 1.0, he = y;
                if (order == 0) he = 1.0;
                for (int j = 1; j < order; ++j) {
                    const double next = y * he - j * he_prev;
                    he_prev = he;
                    he = next;
                }
                return std::pow(-1.0 / s, order) * he * std::exp(-0.5 * y * y);
            }};
}

Univariate exp_sin(double w) {
    return {"exp_sin", [w](double x, int order) {
                // f' = f g' with g = sin(w x): f^{(n+1)} = sum_i binom(n, i) f^{(i)} g^{(n+1-i)}
                std::vector<double> f(static_cast<std::size_t>(order) + 1);
                f[0] = std::exp(std::sin(w * x));
                auto g = [&](int j) { return std::pow(w, j) * std::sin(w * x + j * kPi / 2.0); };
                for (int n = 0; n < order; ++n) {
                    double s = 0.0;
                    for (int i = 0; i <= n; ++i) s += binomial(n, i) * f[i] * g(n + 1 - i);
                    f[n + 1] = s;
                }
                return f[order];
            }};
}

Univariate product(const Univariate& f, const Univariate& g) {
    return {f.id + "*" + g.id, [f, g](double x, int order) {
                double s = 0.0;
                for (int i = 0; i <= order; ++i) s += binomial(order, i) * f.eval(x, i) * g.eval(x, order - i);
                return s;
            }};
}

}  // namespace uni

double SmoothFunction::derivative(std::span<const double> x, std::span<const int> alpha) const {
    if (x.size() != n_vars || alpha.size() != n_vars) throw DimensionMismatch("SmoothFunction: dimension mismatch");
    double s = 0.0;
    for (const auto& t : terms) {
        double p = t.coefficient;
        for (std::size_t j = 0; j < n_vars && p != 0.0; ++j) p *= t.factors[j].eval(x[j], alpha[j]);
        s += p;
    }
    return s;
}

double SmoothFunction::value(std::span<const double> x) const {
    const std::vector<int> zero(n_vars, 0);
    return derivative(x, zero);
}

SmoothFunction separable(std::string id, std::vector<Univariate> factors, double coefficient) {
    SmoothFunction f;
    f.id = std::move(id);
    f.n_vars = factors.size();
    f.terms.push_back({coefficient, std::move(factors)});
    return f;
}

SmoothFunction sum(std::string id, const SmoothFunction& f, const SmoothFunction& g) {
    if (f.n_vars != g.n_vars) throw DimensionMismatch("sum: dimension mismatch");
    SmoothFunction s = f;
    s.id = std::move(id);
    s.terms.insert(s.terms.end(), g.terms.begin(), g.terms.end());
    return s;
}

double fejer_kernel_1d(int N, double T, double y) {
    if (N < 0 || !(T > 0.0)) throw PreconditionError("fejer_kernel: need N >= 0 and T > 0");
    const double den = std::sin(kPi * y / T);
    if (std::abs(den) < 1e-12) return (N + 1.0) / T;
    const double ratio = std::sin(kPi * (N + 1.0) * y / T) / den;
    return ratio * ratio / ((N + 1.0) * T);
}

double fejer_kernel(int N, double T, std::span<const double> y) {
    double p = 1.0;
    for (double v : y) p *= fejer_kernel_1d(N, T, v);
    return p;
}

double fejer_multiplier(int N, long k) { return std::max(0.0, 1.0 - std::abs(static_cast<double>(k)) / (N + 1.0)); }

TrigPolynomial::TrigPolynomial(std::size_t n_vars, double period, int degree)
    : n_vars_(n_vars), period_(period), degree_(degree) {
    if (n_vars == 0 || !(period > 0.0) || degree < 0)
        throw PreconditionError("TrigPolynomial: need n_vars >= 1, period > 0, degree >= 0");
    std::size_t size = 1;
    for (std::size_t j = 0; j < n_vars; ++j) size *= static_cast<std::size_t>(2 * degree + 1);
    coeffs_.assign(size, {0.0, 0.0});
}

std::size_t TrigPolynomial::index(std::span<const int> k) const {
    if (k.size() != n_vars_) throw DimensionMismatch("TrigPolynomial: frequency has the wrong dimension");
    std::size_t idx = 0;
    const std::size_t side = static_cast<std::size_t>(2 * degree_ + 1);
    for (int kj : k) {
        if (std::abs(kj) > degree_) throw PreconditionError("TrigPolynomial: frequency beyond the degree");
        idx = idx * side + static_cast<std::size_t>(kj + degree_);
    }
    return idx;
}

std::complex<double>& TrigPolynomial::coefficient(std::span<const int> k) { return coeffs_[index(k)]; }
std::complex<double> TrigPolynomial::coefficient(std::span<const int> k) const { return coeffs_[index(k)]; }

double TrigPolynomial::derivative(std::span<const double> x, std::span<const int> alpha) const {
    if (x.size() != n_vars_ || alpha.size() != n_vars_) throw DimensionMismatch("TrigPolynomial: dimension mismatch");
    const std::size_t side = static_cast<std::size_t>(2 * degree_ + 1);
    // factor[j][k + N] = (2 pi i k / T)^{alpha_j} exp(2 pi i k x_j / T)
    std::vector<std::vector<std::complex<double>>> factor(n_vars_, std::vector<std::complex<double>>(side));
    for (std::size_t j = 0; j < n_vars_; ++j) {
        for (int k = -degree_; k <= degree_; ++k) {
            const double w = 2.0 * kPi * k / period_;
            factor[j][static_cast<std::size_t>(k + degree_)] =
                std::pow(std::complex<double>(0.0, w), alpha[j]) * std::polar(1.0, w * x[j]);
        }
    }
    if (n_vars_ == 1) {
        std::complex<double> s = 0.0;
        for (std::size_t i = 0; i < side; ++i) s += coeffs_[i] * factor[0][i];
        return s.real();
    }
    // Contract the last variable first so the cost is one pass over the table.
    std::vector<std::complex<double>> partial(coeffs_);
    std::size_t len = coeffs_.size();
    for (std::size_t j = n_vars_; j-- > 0;) {
        len /= side;
        std::vector<std::complex<double>> next(len);
        for (std::size_t i = 0; i < len; ++i) {
            std::complex<double> s = 0.0;
            for (std::size_t r = 0; r < side; ++r) s += partial[i * side + r] * factor[j][r];
            next[i] = s;
        }
        partial.swap(next);
    }
    return partial[0].real();
}

double TrigPolynomial::value(std::span<const double> x) const {
    const std::vector<int> zero(n_vars_, 0);
    return derivative(x, zero);
}

double TrigPolynomial::asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        worst = std::max(worst, std::abs(coeffs_[i] - std::conj(coeffs_[coeffs_.size() - 1 - i])));
    return worst;
}

nlohmann::json TrigPolynomial::to_json() const {
    nlohmann::json terms = nlohmann::json::array();
    const int side = 2 * degree_ + 1;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (coeffs_[i] == std::complex<double>(0.0, 0.0)) continue;
        std::vector<int> k(n_vars_);
        std::size_t rest = i;
        for (std::size_t j = n_vars_; j-- > 0;) {
            k[j] = static_cast<int>(rest % static_cast<std::size_t>(side)) - degree_;
            rest /= static_cast<std::size_t>(side);
        }
        terms.push_back({{"k", k}, {"re", coeffs_[i].real()}, {"im", coeffs_[i].imag()}});
    }
    return {{"n_vars", n_vars_}, {"period", period_}, {"degree", degree_}, {"coefficients", terms}};
}

TrigPolynomial TrigPolynomial::from_json(const nlohmann::json& j) {
    try {
        TrigPolynomial p(j.at("n_vars").get<std::size_t>(), j.at("period").get<double>(), j.at("degree").get<int>());
        for (const auto& t : j.at("coefficients")) {
            const auto k = t.at("k").get<std::vector<int>>();
            p.coefficient(k) = {t.at("re").get<double>(), t.at("im").get<double>()};
        }
        if (p.asymmetry() > 1e-12) throw FormatError("TrigPolynomial: coefficients are not conjugate-symmetric");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("TrigPolynomial: ") + e.what());
    } catch (const DimensionMismatch& e) {
        throw FormatError(e.what());
    } catch (const PreconditionError& e) {
        throw FormatError(e.what());
    }
}

PeriodicGrid sample_grid(const std::function<double(std::span<const double>)>& f, std::size_t n_vars, double period,
                         double origin, std::size_t points) {
    if (n_vars == 0 || points == 0 || !(period > 0.0)) throw PreconditionError("sample_grid: empty grid");
    PeriodicGrid g{n_vars, period, origin, points, {}};
    std::size_t total = 1;
    for (std::size_t j = 0; j < n_vars; ++j) total *= points;
    g.values.resize(total);
    std::vector<double> x(n_vars);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t rest = i;
        for (std::size_t j = n_vars; j-- > 0;) {
            x[j] = origin + static_cast<double>(rest % points) * period / static_cast<double>(points);
            rest /= points;
        }
        g.values[i] = f(x);
    }
    return g;
}

TrigPolynomial fejer_approximate(const PeriodicGrid& grid, int N) {
    if (N < 0) throw PreconditionError("fejer_approximate: N must be non-negative");
    const std::size_t M = grid.points;
    if (M < static_cast<std::size_t>(2 * N + 2))
        throw UnderResolved("fejer_approximate: grid of " + std::to_string(M) + " points per variable cannot resolve degree " +
                            std::to_string(N) + " (need " + std::to_string(2 * N + 2) + ")");
    std::size_t total = 1;
    for (std::size_t j = 0; j < grid.n_vars; ++j) total *= M;
    if (grid.values.size() != total) throw DimensionMismatch("fejer_approximate: grid size does not match its shape");

    std::vector<int> dims(grid.n_vars, static_cast<int>(M));
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    for (std::size_t i = 0; i < total; ++i) {
        buf[i][0] = grid.values[i];
        buf[i][1] = 0.0;
    }
    fftw_plan plan = fftw_plan_dft(static_cast<int>(grid.n_vars), dims.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    TrigPolynomial p(grid.n_vars, grid.period, N);
    const double scale = 1.0 / static_cast<double>(total);
    std::vector<int> k(grid.n_vars, -N);
    for (;;) {
        std::size_t idx = 0;
        double weight = scale;
        double phase = 0.0;
        for (std::size_t j = 0; j < grid.n_vars; ++j) {
            idx = idx * M + static_cast<std::size_t>((k[j] % static_cast<int>(M) + static_cast<int>(M)) % static_cast<int>(M));
            weight *= fejer_multiplier(N, k[j]);
            phase -= 2.0 * kPi * k[j] * grid.origin / grid.period;
        }
        p.coefficient(k) = weight * std::complex<double>(buf[idx][0], buf[idx][1]) * std::polar(1.0, phase);
        std::size_t j = grid.n_vars;
        while (j-- > 0) {
            if (++k[j] <= N) break;
            k[j] = -N;
        }
        if (j == static_cast<std::size_t>(-1)) break;
    }
    fftw_free(buf);
    return p;
}

TrigPolynomial fejer_approximate(const TrigPolynomial& src, int N) {
    if (N < 0) throw PreconditionError("fejer_approximate: N must be non-negative");
    TrigPolynomial p(src.n_vars(), src.period(), N);
    const int D = std::min(N, src.degree());
    std::vector<int> k(src.n_vars(), -D);
    for (;;) {
        double weight = 1.0;
        for (int kj : k) weight *= fejer_multiplier(N, kj);
        p.coefficient(k) = weight * src.coefficient(k);
        std::size_t j = k.size();
        while (j-- > 0) {
            if (++k[j] <= D) break;
            k[j] = -D;
        }
        if (j == static_cast<std::size_t>(-1)) break;
    }
    return p;
}

Cutoff::Cutoff(int k, int h) : k_(k), h_(h) {
    if (k < 3) throw PreconditionError("periodize: k must be at least 3");
    if (h < 0) throw PreconditionError("periodize: h must be non-negative");
    // S(u) = u^{h+1} sum_i binom(h+i, i) binom(2h+1, h-i) (-u)^i
    std::vector<double> s(static_cast<std::size_t>(2 * h + 2), 0.0);
    for (int i = 0; i <= h; ++i)
        s[static_cast<std::size_t>(h + 1 + i)] = binomial(h + i, i) * binomial(2 * h + 1, h - i) * (i % 2 ? -1.0 : 1.0);
    poly_.push_back(s);
    for (int j = 1; j <= h; ++j) {
        const auto& prev = poly_.back();
        std::vector<double> d(prev.size() > 1 ? prev.size() - 1 : 1, 0.0);
        for (std::size_t i = 1; i < prev.size(); ++i) d[i - 1] = prev[i] * static_cast<double>(i);
        poly_.push_back(d);
    }
    // Suprema by dense sampling of the polynomials on [0, 1].
    const int samples = 200000;
    for (int j = 0; j <= h; ++j) {
        double m = 0.0;
        for (int i = 0; i <= samples; ++i)
            m = std::max(m, std::abs(poly_[static_cast<std::size_t>(j)].empty()
                                         ? 0.0
                                         : poly_eval(poly_[static_cast<std::size_t>(j)], static_cast<double>(i) / samples)));
        sup_.push_back(std::ldexp(m, j));
    }
}

double Cutoff::eval(double t, int order) const {
    if (order < 0 || order > h_) throw PreconditionError("cutoff: derivative order beyond h");
    const double a = std::abs(t);
    const double inner = 0.5 * (k_ - 1);
    const double outer = 0.5 * k_;
    if (a <= inner) return order == 0 ? 1.0 : 0.0;
    if (a >= outer) return 0.0;
    const double u = 2.0 * (outer - a);
    const double chain = std::pow(t > 0 ? -2.0 : 2.0, order);
    return chain * poly_eval(poly_[static_cast<std::size_t>(order)], u);
}

double PeriodicFunction::value(std::span<const double> x) const {
    const std::vector<int> zero(n_vars, 0);
    return derivative(x, zero);
}

PeriodicFunction periodize(const SmoothFunction& phi, int k, int h) {
    const Cutoff theta(k, h);
    PeriodicFunction out;
    out.n_vars = phi.n_vars;
    out.period = k;
    out.derivative = [phi, theta](std::span<const double> x, std::span<const int> alpha) {
        const std::size_t n = phi.n_vars;
        if (x.size() != n || alpha.size() != n) throw DimensionMismatch("periodize: dimension mismatch");
        std::vector<double> y(n);
        const double T = theta.k();
        for (std::size_t j = 0; j < n; ++j) y[j] = x[j] - T * std::round(x[j] / T);
        double s = 0.0;
        for_each_below(alpha, [&](std::span<const int> beta) {
            double w = 1.0;
            for (std::size_t j = 0; j < n && w != 0.0; ++j)
                w *= binomial(alpha[j], beta[j]) * theta.eval(y[j], alpha[j] - beta[j]);
            if (w != 0.0) s += w * phi.derivative(y, beta);
        });
        return s;
    };
    return out;
}

double derivative_constant(const Cutoff& cutoff, std::span<const int> alpha) {
    double c = 1.0;
    for (int a : alpha) {
        double s = 0.0;
        for (int i = 0; i <= a; ++i) s += binomial(a, i) * cutoff.sup_derivative(i);
        c *= s;
    }
    return c;
}

ApproxReport approx_report(const SmoothFunction& phi, int h, const std::vector<int>& k_list,
                           std::function<int(int)> degree_for_k, std::size_t probes_per_axis) {
    const std::size_t n = phi.n_vars;
    if (n == 0 || n > 2) throw PreconditionError("approx_report: one or two variables supported");
    if (h < 0) throw PreconditionError("approx_report: h must be non-negative");
    if (!degree_for_k) degree_for_k = [n](int k) { return n == 1 ? 8 * k * k : 2 * k * k; };

    // all alpha with |alpha| <= h
    std::vector<std::vector<int>> alphas;
    std::vector<int> bound(n, h);
    for_each_below(bound, [&](std::span<const int> a) {
        int total = 0;
        for (int v : a) total += v;
        if (total <= h) alphas.emplace_back(a.begin(), a.end());
    });
    auto grid_points = [n](double lo, double hi, std::size_t per_axis) {
        std::vector<std::vector<double>> pts;
        std::vector<int> idx(n, 0);
        std::vector<int> top(n, static_cast<int>(per_axis) - 1);
        for_each_below(top, [&](std::span<const int> i) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j)
                x[j] = per_axis == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i[j] / static_cast<double>(per_axis - 1);
            pts.push_back(x);
        });
        return pts;
    };
    const auto probes = grid_points(-1.0, 1.0, probes_per_axis);

    ApproxReport rep;
    rep.phi_id = phi.id;
    rep.h = h;
    rep.bounds_hold = true;
    for (int k : k_list) {
        const Cutoff theta(k, h);
        const auto per = periodize(phi, k, h);
        ApproxEntry e;
        e.k = k;
        e.degree = degree_for_k(k);
        const auto grid = sample_grid([&](std::span<const double> x) { return per.value(x); }, n, k, -0.5 * k,
                                      static_cast<std::size_t>(2 * e.degree + 2));
        const auto poly = fejer_approximate(grid, e.degree);
        e.max_error.assign(static_cast<std::size_t>(h) + 1, 0.0);
        for (const auto& a : alphas) {
            int order = 0;
            for (int v : a) order += v;
            for (const auto& x : probes)
                e.max_error[static_cast<std::size_t>(order)] =
                    std::max(e.max_error[static_cast<std::size_t>(order)], std::abs(poly.derivative(x, a) - phi.derivative(x, a)));
        }
        const auto check = grid_points(-0.5 * k, 0.5 * k, n == 1 ? static_cast<std::size_t>(64 * k + 1)
                                                                  : static_cast<std::size_t>(12 * k + 1));
        for (const auto& a : alphas) {
            DerivativeBound b;
            b.alpha = a;
            b.constant = derivative_constant(theta, a);
            for_each_below(a, [&](std::span<const int> beta) {
                for (const auto& x : check) b.phi_norm = std::max(b.phi_norm, std::abs(phi.derivative(x, beta)));
            });
            for (const auto& x : check) b.approx_sup = std::max(b.approx_sup, std::abs(poly.derivative(x, a)));
            b.pass = b.approx_sup <= b.constant * b.phi_norm * (1.0 + 1e-12) + 1e-12;
            rep.bounds_hold = rep.bounds_hold && b.pass;
            e.bounds.push_back(std::move(b));
        }
        rep.entries.push_back(std::move(e));
    }
    rep.errors_decreasing = true;
    for (std::size_t i = 1; i < rep.entries.size(); ++i)
        for (int o = 0; o <= h; ++o) {
            const double prev = rep.entries[i - 1].max_error[static_cast<std::size_t>(o)];
            const double cur = rep.entries[i].max_error[static_cast<std::size_t>(o)];
            if (!(cur < prev || cur < 1e-12)) rep.errors_decreasing = false;
        }
    return rep;
}

}  // namespace surfmeas

#include "surfmeas/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <boost/numeric/odeint.hpp>

#include "surfmeas/errors.hpp"
#include "surfmeas/parallel.hpp"
#include "surfmeas/quadrature.hpp"
#include "surfmeas/special.hpp"

namespace surfmeas {

namespace {

// Noise streams live far away from the stream indices used by sample_product.
constexpr std::uint64_t kNoiseStreamBase = 1ULL << 40;

struct Coefficients {
    int m = 1;
    Scheme scheme = Scheme::TamedExplicit;
    double dt = 0.0;
    double sqrt_dt = 0.0;
    std::vector<double> inv_2mu;
    std::vector<double> ou_decay;  // exp(-dt / (2 mu))
    std::vector<double> ou_sd;      // sqrt(mu (1 - exp(-dt / mu)))

    Coefficients(const ProductLaw& law, Scheme s, double step) : m(law.m()), scheme(s), dt(step), sqrt_dt(std::sqrt(step)) {
        for (double mu : law.weights()) {
            inv_2mu.push_back(0.5 / mu);
            ou_decay.push_back(std::exp(-step / (2.0 * mu)));
            ou_sd.push_back(std::sqrt(mu * -std::expm1(-step / mu)));
        }
    }

    double drift(std::size_t h, double x) const { return -ipow(x * x, m - 1) * x * inv_2mu[h]; }

    /// Deterministic part of the step; the noise enters as noise_scale(h) * xi.
    double mean(std::size_t h, double x) const {
        if (scheme == Scheme::ExactOu) return ou_decay[h] * x;
        const double d = drift(h, x);
        return x + dt * d / (1.0 + dt * std::abs(d));
    }

    double noise_scale(std::size_t h) const { return scheme == Scheme::ExactOu ? ou_sd[h] : sqrt_dt; }
};

void advance_row(const Coefficients& c, std::span<double> x, RandomStream& rng, std::size_t trajectory, double time) {
    for (std::size_t h = 0; h < x.size(); ++h) {
        const double next = c.mean(h, x[h]) + c.noise_scale(h) * rng.normal();
        if (!std::isfinite(next)) throw BlowUp(trajectory, h, time);
        x[h] = next;
    }
}

std::size_t steps_for(double t, double dt) {
    const double ratio = t / dt;
    const double steps = std::round(ratio);
    if (t < 0.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
        throw PreconditionError("time " + std::to_string(t) + " is not a non-negative multiple of dt");
    return static_cast<std::size_t>(steps);
}

template <class Fn>
std::vector<McEstimate> ensemble_means(std::size_t count, std::size_t block_rows, std::size_t k, std::uint64_t seed,
                                       Fn&& fn) {
    if (count == 0) throw EmptyBatch();
    const std::size_t blocks = (count + block_rows - 1) / block_rows;
    std::vector<std::vector<MeanAccumulator>> partial(blocks, std::vector<MeanAccumulator>(k));
    parallel_for_blocks(blocks, [&](std::size_t b) {
        const std::size_t lo = b * block_rows;
        const std::size_t hi = std::min(count, lo + block_rows);
        std::vector<double> values(k);
        for (std::size_t i = lo; i < hi; ++i) {
            fn(i, values);
            for (std::size_t j = 0; j < k; ++j) partial[b][j].add(values[j]);
        }
    });
    std::vector<McEstimate> out;
    for (std::size_t j = 0; j < k; ++j) {
        MeanAccumulator total;
        for (const auto& p : partial) total.merge(p[j]);
        out.push_back(total.estimate(seed));
    }
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::ExactOu ? "exact_ou" : "tamed_explicit"; }

Scheme parse_scheme(const std::string& name) {
    if (name == "tamed_explicit") return Scheme::TamedExplicit;
    if (name == "exact_ou") return Scheme::ExactOu;
    throw FormatError("unknown scheme '" + name + "' (expected tamed_explicit or exact_ou)");
}

void validate(const SdeConfig& cfg, int m) {
    if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0)) throw PreconditionError("sde: dt and horizon must be positive");
    if (cfg.dt > cfg.horizon) throw PreconditionError("sde: dt exceeds the horizon");
    if (cfg.ensemble == 0) throw PreconditionError("sde: ensemble must be positive");
    if (cfg.block_rows == 0) throw PreconditionError("sde: block_rows must be positive");
    if (cfg.scheme == Scheme::ExactOu && m != 1)
        throw PreconditionError("sde: exact_ou is only valid for m = 1 (got m = " + std::to_string(m) + ")");
}

EnsembleState ensemble_from_point(std::vector<double> x0, std::size_t count) {
    EnsembleState s;
    s.count = count;
    s.dim = x0.size();
    s.states.reserve(count * s.dim);
    for (std::size_t i = 0; i < count; ++i) s.states.insert(s.states.end(), x0.begin(), x0.end());
    return s;
}

EnsembleState ensemble_from_batch(const SampleBatch& batch) {
    EnsembleState s;
    s.count = batch.count;
    s.dim = batch.dim;
    s.states = batch.data;
    return s;
}

std::vector<double> drift(const ProductLaw& law, ConstSpan x) {
    if (x.size() != law.dim()) throw DimensionMismatch("drift: dimension mismatch");
    std::vector<double> out(x.size());
    for (std::size_t h = 0; h < x.size(); ++h) out[h] = -ipow(x[h] * x[h], law.m() - 1) * x[h] / (2.0 * law.weight(h));
    return out;
}

EnsembleState step(const EnsembleState& state, const ProductLaw& law, const SdeConfig& cfg, RandomStream& rng) {
    validate(cfg, law.m());
    if (state.dim != law.dim()) throw DimensionMismatch("step: ensemble dimension does not match the law");
    const Coefficients c(law, cfg.scheme, cfg.dt);
    EnsembleState next = state;
    next.time = state.time + cfg.dt;
    for (std::size_t i = 0; i < next.count; ++i) advance_row(c, next.row(i), rng, i, next.time);
    return next;
}

std::vector<EnsembleState> evolve(const EnsembleState& start, const ProductLaw& law, const SdeConfig& cfg,
                                  const std::vector<double>& times) {
    validate(cfg, law.m());
    if (start.dim != law.dim()) throw DimensionMismatch("evolve: ensemble dimension does not match the law");
    std::vector<std::size_t> steps;
    for (double t : times) {
        if (t > cfg.horizon * (1.0 + 1e-12)) throw PreconditionError("evolve: requested time beyond the horizon");
        steps.push_back(steps_for(t, cfg.dt));
        if (steps.size() > 1 && steps.back() < steps[steps.size() - 2])
            throw PreconditionError("evolve: times must be ascending");
    }
    std::vector<EnsembleState> out(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
        out[j].time = start.time + static_cast<double>(steps[j]) * cfg.dt;
        out[j].count = start.count;
        out[j].dim = start.dim;
        out[j].states.resize(start.states.size());
    }
    const Coefficients c(law, cfg.scheme, cfg.dt);
    const std::size_t blocks = (start.count + cfg.block_rows - 1) / cfg.block_rows;
    parallel_for_blocks(blocks, [&](std::size_t b) {
        const std::size_t lo = b * cfg.block_rows;
        const std::size_t hi = std::min(start.count, lo + cfg.block_rows);
        std::vector<double> x(start.states.begin() + lo * start.dim, start.states.begin() + hi * start.dim);
        RandomStream rng(cfg.seed, kNoiseStreamBase + b);
        std::size_t done = 0;
        for (std::size_t j = 0; j < times.size(); ++j) {
            for (; done < steps[j]; ++done) {
                const double t = start.time + static_cast<double>(done + 1) * cfg.dt;
                for (std::size_t i = lo; i < hi; ++i)
                    advance_row(c, std::span<double>(x.data() + (i - lo) * start.dim, start.dim), rng, i, t);
            }
            std::copy(x.begin(), x.end(), out[j].states.begin() + lo * start.dim);
        }
    });
    return out;
}

McEstimate evolve_semigroup(const ProductLaw& law, const CylFunction& phi, std::vector<double> x0, double t,
                            const SdeConfig& cfg) {
    validate(cfg, law.m());
    if (x0.size() != law.dim()) throw DimensionMismatch("evolve_semigroup: x0 has the wrong dimension");
    if (t > cfg.horizon) throw PreconditionError("evolve_semigroup: t exceeds the horizon");
    if (t == 0.0) return McEstimate{phi.value(x0), 0.0, cfg.ensemble, cfg.seed};
    const auto end = evolve(ensemble_from_point(x0, cfg.ensemble), law, cfg, {t}).front();
    return ensemble_means(end.count, cfg.block_rows, 1, cfg.seed,
                          [&](std::size_t i, std::vector<double>& v) { v[0] = phi.value(end.row(i)); })
        .front();
}

std::vector<std::vector<McEstimate>> invariance_residuals(const ProductLaw& law, const std::vector<CylFunction>& phis,
                                                          const std::vector<double>& times, const SdeConfig& cfg) {
    validate(cfg, law.m());
    const auto start = ensemble_from_batch(sample_product(law, cfg.ensemble, cfg.seed, cfg.block_rows));
    const auto snaps = evolve(start, law, cfg, times);
    const std::size_t k = phis.size() * times.size();
    const auto flat = ensemble_means(start.count, cfg.block_rows, k, cfg.seed, [&](std::size_t i, std::vector<double>& v) {
        for (std::size_t p = 0; p < phis.size(); ++p) {
            const double base = phis[p].value(start.row(i));
            for (std::size_t j = 0; j < times.size(); ++j)
                v[p * times.size() + j] = phis[p].value(snaps[j].row(i)) - base;
        }
    });
    std::vector<std::vector<McEstimate>> out(phis.size());
    for (std::size_t p = 0; p < phis.size(); ++p)
        out[p].assign(flat.begin() + p * times.size(), flat.begin() + (p + 1) * times.size());
    return out;
}

McEstimate invariance_residual(const ProductLaw& law, const CylFunction& phi, double t, const SdeConfig& cfg) {
    return invariance_residuals(law, {phi}, {t}, cfg).front().front();
}

RefinementStudy dt_refinement(const ProductLaw& law, const CylFunction& phi, double t, const SdeConfig& cfg,
                              int levels) {
    validate(cfg, law.m());
    if (levels < 2) throw PreconditionError("dt_refinement: need at least two levels");
    RefinementStudy study;
    std::vector<std::size_t> stride(levels);
    std::vector<Coefficients> coeff;
    for (int l = 0; l < levels; ++l) {
        study.dts.push_back(cfg.dt / static_cast<double>(1u << l));
        stride[l] = 1u << (levels - 1 - l);
        coeff.emplace_back(law, cfg.scheme, study.dts.back());
    }
    const double fine_dt = study.dts.back();
    const std::size_t fine_steps = steps_for(t, fine_dt);
    const auto start = ensemble_from_batch(sample_product(law, cfg.ensemble, cfg.seed, cfg.block_rows));
    const std::size_t n = start.dim;
    const std::size_t L = static_cast<std::size_t>(levels);

    // Final states per level, filled block by block.
    std::vector<std::vector<double>> final_states(L, std::vector<double>(start.states.size()));
    const std::size_t blocks = (start.count + cfg.block_rows - 1) / cfg.block_rows;
    parallel_for_blocks(blocks, [&](std::size_t b) {
        const std::size_t lo = b * cfg.block_rows;
        const std::size_t hi = std::min(start.count, lo + cfg.block_rows);
        const std::size_t rows = hi - lo;
        std::vector<std::vector<double>> x(L, std::vector<double>(start.states.begin() + lo * n,
                                                                  start.states.begin() + hi * n));
        std::vector<std::vector<double>> acc(L, std::vector<double>(rows * n, 0.0));
        RandomStream rng(cfg.seed, kNoiseStreamBase + b);
        for (std::size_t s = 1; s <= fine_steps; ++s) {
            const double time = static_cast<double>(s) * fine_dt;
            for (std::size_t idx = 0; idx < rows * n; ++idx) {
                const double xi = rng.normal();
                for (std::size_t l = 0; l < L; ++l) acc[l][idx] += xi;
            }
            for (std::size_t l = 0; l < L; ++l) {
                if (s % stride[l] != 0) continue;
                const double norm = 1.0 / std::sqrt(static_cast<double>(stride[l]));
                for (std::size_t idx = 0; idx < rows * n; ++idx) {
                    const std::size_t h = idx % n;
                    const double next = coeff[l].mean(h, x[l][idx]) + coeff[l].noise_scale(h) * acc[l][idx] * norm;
                    if (!std::isfinite(next)) throw BlowUp(lo + idx / n, h, time);
                    x[l][idx] = next;
                    acc[l][idx] = 0.0;
                }
            }
        }
        for (std::size_t l = 0; l < L; ++l) std::copy(x[l].begin(), x[l].end(), final_states[l].begin() + lo * n);
    });

    const auto means = ensemble_means(start.count, cfg.block_rows, 2 * L - 1, cfg.seed,
                                      [&](std::size_t i, std::vector<double>& v) {
                                          const double base = phi.value(start.row(i));
                                          std::vector<double> at(L);
                                          for (std::size_t l = 0; l < L; ++l)
                                              at[l] = phi.value(std::span<const double>(final_states[l].data() + i * n, n));
                                          for (std::size_t l = 0; l < L; ++l) v[l] = at[l] - base;
                                          for (std::size_t l = 0; l + 1 < L; ++l) v[L + l] = at[l] - at[l + 1];
                                      });
    study.residuals.assign(means.begin(), means.begin() + L);
    study.diffs.assign(means.begin() + L, means.end());
    return study;
}

MomentBoundReport moment_bound_check(const ProductLaw& law, std::vector<double> x0, const std::vector<double>& t_grid,
                                     const SdeConfig& cfg, double se_multiplier) {
    validate(cfg, law.m());
    if (x0.size() != law.dim()) throw DimensionMismatch("moment_bound_check: x0 has the wrong dimension");
    double x0_sq = 0.0;
    for (double v : x0) x0_sq += v * v;
    const double bound = law.lambda() + x0_sq;
    const auto snaps = evolve(ensemble_from_point(x0, cfg.ensemble), law, cfg, t_grid);
    const auto means = ensemble_means(cfg.ensemble, cfg.block_rows, t_grid.size(), cfg.seed,
                                      [&](std::size_t i, std::vector<double>& v) {
                                          for (std::size_t j = 0; j < snaps.size(); ++j) {
                                              double s = 0.0;
                                              for (double c : snaps[j].row(i)) s += c * c;
                                              v[j] = s;
                                          }
                                      });
    MomentBoundReport rep;
    rep.x0 = std::move(x0);
    rep.pass = true;
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        MomentBoundEntry e;
        e.time = t_grid[j];
        e.mean_sq = means[j];
        e.bound = bound;
        e.allowance = se_multiplier * e.mean_sq.std_error + cfg.dt * bound;
        e.pass = e.mean_sq.value <= e.bound + e.allowance;
        rep.pass = rep.pass && e.pass;
        rep.entries.push_back(e);
    }
    return rep;
}

void write_moment_csv(const MomentBoundReport& report, std::ostream& out) {
    out << "time,mean_norm_sq,std_error,bound,allowance,pass\n";
    char line[256];
    for (const auto& e : report.entries) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", e.time, e.mean_sq.value,
                      e.mean_sq.std_error, e.bound, e.allowance, e.pass ? 1 : 0);
        out << line;
    }
}

OdeReport ode_comparison(double alpha, int m, double v0, double dt, double horizon, double tolerance) {
    if (!(alpha > 0.0)) throw PreconditionError("ode_comparison: alpha must be positive");
    if (m < 1) throw PreconditionError("ode_comparison: m must be >= 1");
    if (!(v0 >= 0.0)) throw PreconditionError("ode_comparison: v0 must be non-negative");
    if (!(dt > 0.0) || !(horizon >= dt)) throw PreconditionError("ode_comparison: need 0 < dt <= horizon");
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 1>;
    OdeReport rep;
    rep.alpha = alpha;
    rep.m = m;
    rep.v0 = v0;
    const double fixed_point = std::pow(alpha, -1.0 / m);
    rep.bound = std::max(fixed_point, v0);
    auto rhs = [alpha, m](const State& v, State& dv, double) { dv[0] = 1.0 - alpha * ipow(std::max(v[0], 0.0), m); };
    State v{v0};
    auto stepper = odeint::make_controlled(1e-12, 1e-12, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_const(stepper, rhs, v, 0.0, horizon, dt, [&](const State& s, double t) {
        rep.times.push_back(t);
        rep.values.push_back(s[0]);
    });
    rep.max_excess = -rep.bound;
    for (std::size_t i = 0; i < rep.values.size(); ++i) {
        rep.max_excess = std::max(rep.max_excess, rep.values[i] - rep.bound);
        if (i > 0) {
            const double d = rep.values[i] - rep.values[i - 1];
            if (v0 < fixed_point && d < -tolerance) rep.monotone = false;
            if (v0 > fixed_point && d > tolerance) rep.monotone = false;
            if (v0 == fixed_point && std::abs(rep.values[i] - v0) > tolerance) rep.monotone = false;
        }
    }
    rep.pass = rep.max_excess <= tolerance && rep.monotone;
    return rep;
}

double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // Jacobi theta form, fast for small lambda.
        const double pi = std::numbers::pi;
        double s = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double j = 2.0 * k - 1.0;
            s += std::exp(-j * j * pi * pi / (8.0 * lambda * lambda));
        }
        return 1.0 - std::sqrt(2.0 * pi) / lambda * s;
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_normal(std::vector<double> samples, double variance) {
    if (samples.empty()) throw EmptyBatch();
    if (!(variance > 0.0)) throw PreconditionError("ks_normal: variance must be positive");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    const double sd = std::sqrt(variance);
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = normal_cdf(samples[i] / sd);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    KsResult r;
    r.statistic = d;
    r.n = samples.size();
    const double root = std::sqrt(n);
    r.p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
    return r;
}

double one_step_expectation(const ProductLaw& law, const CylFunction& phi, ConstSpan x, double dt, Scheme scheme) {
    const std::size_t n = law.dim();
    if (n > 3) throw PreconditionError("one_step_expectation: dimension must be at most 3");
    if (x.size() != n) throw DimensionMismatch("one_step_expectation: x has the wrong dimension");
    if (scheme == Scheme::ExactOu && law.m() != 1) throw PreconditionError("exact_ou is only valid for m = 1");
    const Coefficients c(law, scheme, dt);
    const auto rule = quad::composite(6, 16, -9.0, 9.0);
    std::vector<double> gauss(rule.nodes.size());
    for (std::size_t i = 0; i < gauss.size(); ++i)
        gauss[i] = rule.weights[i] * std::exp(-0.5 * rule.nodes[i] * rule.nodes[i]) / std::sqrt(2.0 * std::numbers::pi);
    std::vector<double> mean(n), scale(n), y(n);
    for (std::size_t h = 0; h < n; ++h) {
        mean[h] = c.mean(h, x[h]);
        scale[h] = c.noise_scale(h);
    }
    std::vector<std::size_t> idx(n, 0);
    double total = 0.0;
    for (;;) {
        double w = 1.0;
        for (std::size_t h = 0; h < n; ++h) {
            y[h] = mean[h] + scale[h] * rule.nodes[idx[h]];
            w *= gauss[idx[h]];
        }
        total += w * phi.value(y);
        std::size_t h = 0;
        while (h < n && ++idx[h] == rule.nodes.size()) idx[h++] = 0;
        if (h == n) break;
    }
    return total;
}

std::vector<double> generator_consistency(const OperatorContext& ctx, const CylFunction& phi, ConstSpan x,
                                          const std::vector<double>& dts, Scheme scheme) {
    const double l_phi = generator_apply(ctx, phi, x);
    const double base = phi.value(x);
    std::vector<double> out;
    for (double dt : dts) out.push_back((one_step_expectation(ctx.law, phi, x, dt, scheme) - base) / dt - l_phi);
    return out;
}

}  // namespace surfmeas

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "surfmeas/calculus.hpp"

namespace surfmeas {

enum class Scheme { TamedExplicit, ExactOu };
std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

struct SdeConfig {
    double dt = 1e-3;
    double horizon = 5.0;
    Scheme scheme = Scheme::TamedExplicit;
    std::size_t ensemble = 100000;
    std::uint64_t seed = 1;
    std::size_t block_rows = kDefaultBlockRows;
};

/// Throws PreconditionError unless dt <= horizon, both positive, ensemble > 0,
/// and exact_ou is only paired with m = 1.
void validate(const SdeConfig& cfg, int m);

/// Trajectories stored row-major, `count` rows of `dim` coordinates.
struct EnsembleState {
    double time = 0.0;
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<double> states;

    std::span<const double> row(std::size_t i) const { return {states.data() + i * dim, dim}; }
    std::span<double> row(std::size_t i) { return {states.data() + i * dim, dim}; }
};

EnsembleState ensemble_from_point(std::vector<double> x0, std::size_t count);
EnsembleState ensemble_from_batch(const SampleBatch& batch);

/// -|x_h|^{2m-2} x_h / (2 mu_h) per coordinate.
std::vector<double> drift(const ProductLaw& law, ConstSpan x);

/// One step of every trajectory with normals drawn from `rng` in row order.
EnsembleState step(const EnsembleState& state, const ProductLaw& law, const SdeConfig& cfg, RandomStream& rng);

/// Advances trajectories block by block; block b draws its noise from its own
/// stream, so the result does not depend on the worker count. Returns the
/// states at each requested time (multiples of dt, ascending, <= horizon).
std::vector<EnsembleState> evolve(const EnsembleState& start, const ProductLaw& law, const SdeConfig& cfg,
                                  const std::vector<double>& times);

/// P_t phi(x0): ensemble average of phi(X(t, x0)).
McEstimate evolve_semigroup(const ProductLaw& law, const CylFunction& phi, std::vector<double> x0, double t,
                            const SdeConfig& cfg);

/// int P_t phi dnu - int phi dnu from an ensemble drawn from nu (seed cfg.seed),
/// paired on trajectories.
McEstimate invariance_residual(const ProductLaw& law, const CylFunction& phi, double t, const SdeConfig& cfg);

/// Residuals for several functions and times from one simulation; result[k][j]
/// belongs to phis[k] at times[j].
std::vector<std::vector<McEstimate>> invariance_residuals(const ProductLaw& law, const std::vector<CylFunction>& phis,
                                                          const std::vector<double>& times, const SdeConfig& cfg);

/// Weak-error study with Brownian increments shared between step sizes dt,
/// dt/2, ..., dt/2^{levels-1}, started from nu. diffs[l] estimates
/// E phi(X^{dt_l}_t) - E phi(X^{dt_{l+1}}_t), paired on trajectories.
struct RefinementStudy {
    std::vector<double> dts;
    std::vector<McEstimate> residuals;  // E phi(X_t) - E phi(X_0) per level
    std::vector<McEstimate> diffs;
};

RefinementStudy dt_refinement(const ProductLaw& law, const CylFunction& phi, double t, const SdeConfig& cfg,
                              int levels = 3);

struct MomentBoundEntry {
    double time = 0.0;
    McEstimate mean_sq;
    double bound = 0.0;      // Lambda_m + |x0|^2
    double allowance = 0.0;  // 4 SE + dt * bound
    bool pass = false;
};

struct MomentBoundReport {
    std::vector<double> x0;
    std::vector<MomentBoundEntry> entries;
    bool pass = false;
};

MomentBoundReport moment_bound_check(const ProductLaw& law, std::vector<double> x0, const std::vector<double>& t_grid,
                                     const SdeConfig& cfg, double se_multiplier = 4.0);

void write_moment_csv(const MomentBoundReport& report, std::ostream& out);

struct OdeReport {
    double alpha = 0.0;
    int m = 1;
    double v0 = 0.0;
    double bound = 0.0;  // max(alpha^{-1/m}, v0)
    std::vector<double> times;
    std::vector<double> values;
    double max_excess = 0.0;  // max(v - bound), <= 0 when the bound holds
    bool monotone = true;
    bool pass = false;
};

/// Adaptive Dormand-Prince integration of v' = 1 - alpha v^m, sampled every dt.
OdeReport ode_comparison(double alpha, int m, double v0, double dt, double horizon, double tolerance = 1e-8);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Kolmogorov-Smirnov test of the samples against N(0, variance).
KsResult ks_normal(std::vector<double> samples, double variance);

/// Asymptotic Kolmogorov survival function P(sqrt(n) D_n > lambda).
double kolmogorov_survival(double lambda);

/// E phi(X_dt) from x for a single step of the scheme, by tensor quadrature in
/// the Gaussian increment (dimension <= 3).
double one_step_expectation(const ProductLaw& law, const CylFunction& phi, ConstSpan x, double dt, Scheme scheme);

/// (P_dt phi(x) - phi(x)) / dt - L phi(x) at each dt.
std::vector<double> generator_consistency(const OperatorContext& ctx, const CylFunction& phi, ConstSpan x,
                                          const std::vector<double>& dts, Scheme scheme);

}  // namespace surfmeas

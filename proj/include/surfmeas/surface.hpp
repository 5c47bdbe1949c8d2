#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "surfmeas/calculus.hpp"

namespace surfmeas {

enum class LevelKind { Sphere, Hyperplane, Custom };
std::string to_string(LevelKind k);

/// A level-set-defining function g with the fields Psi = Mg/|Mg|^2 and
/// N = Mg/|Mg| and their adjoint divergences.
struct LevelFunction {
    LevelKind kind = LevelKind::Custom;
    CylFunction g;
    std::vector<double> b;  // hyperplane direction
    VectorField psi;
    VectorField normal;
    CylFunction mg_norm;  // |Mg|
    /// Level through the point where div Psi carries a point mass (the origin
    /// of g = |x|^2 in dimension <= 2). Representations integrate over the side
    /// of the level set that excludes it.
    std::optional<double> singular_level;
    bool psi_certified = false;
};

LevelFunction sphere_level(const OperatorContext& ctx, SphereDivReading reading = SphereDivReading::QxSquared);
LevelFunction hyperplane_level(const OperatorContext& ctx, std::vector<double> b);

/// <Mg, z> as a test function.
CylFunction mg_dot(const OperatorContext& ctx, const LevelFunction& lf, std::vector<double> z);

/// Certifies lf.psi. Monte Carlo adjoint residuals over the battery, except
/// for the sphere in dimension 2 or 3 where M*Psi is not square integrable:
/// there the deterministic quadrature identity is used, with the point mass
/// at the origin accounted for in dimension 2.
FieldCertificate certify_level(const OperatorContext& ctx, LevelFunction& lf, const std::vector<CylFunction>& battery,
                               const SampleBatch& batch, const TolerancePolicy& policy);

enum class DensityMethod { Divergence, SmoothedFd, Oracle };
std::string to_string(DensityMethod m);

struct SurfaceDensityEstimate {
    double r = 0.0;
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    DensityMethod method = DensityMethod::Divergence;
};

/// Side of the level set the divergence representation integrates over.
enum class Side { Below, Above };
Side representation_side(const LevelFunction& lf, double r, const SampleBatch& batch);

std::vector<double> level_values(const LevelFunction& lf, const SampleBatch& batch);

/// F_phi(r): mean of phi(x) 1{g(x) <= r}.
McEstimate sublevel_integral(const LevelFunction& lf, const CylFunction& phi, double r, const SampleBatch& batch);

/// q_phi(r) = int_{g<r} (<M phi, Psi> - phi M*Psi) dnu, or minus the same
/// integral over {g>r}; the two agree when int M*(phi Psi) dnu = 0.
SurfaceDensityEstimate q_divergence(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi,
                                    double r, const SampleBatch& batch);

/// (F_phi(r+h) - F_phi(r-h)) / (2h) on the empirical measure.
SurfaceDensityEstimate q_smoothed_fd(const LevelFunction& lf, const CylFunction& phi, double r,
                                     const SampleBatch& batch, double bandwidth);

/// Silverman-style 1.06 sd(g) count^{-1/5}, capped at the distance from r to
/// the edge of the sample range, then widened until at least `min_window`
/// samples fall within [r-h, r+h].
double default_bandwidth(const std::vector<double>& sorted_g, double r, std::size_t min_window = 500);

/// Paired difference q_divergence - q_smoothed_fd on one batch.
McEstimate q_method_gap(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi, double r,
                        const SampleBatch& batch, double bandwidth);

/// int phi d sigma_r^g for continuous phi.
McEstimate surface_integral(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi, double r,
                            const SampleBatch& batch);

/// int phi d rho_r = q_{|Mg| phi}(r) = -int_{g<r} M*(phi Mg/|Mg|) dnu.
McEstimate rho_integral(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi, double r,
                        const SampleBatch& batch);

/// int_{g<r} <M phi, z> - int_{g<r} phi W_z - q_{<Mg,z> phi}(r).
McEstimate ibp_sublevel_residual(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi,
                                 std::vector<double> z, double r, const SampleBatch& batch);

/// Per-field entry of the perimeter check: value = int_{g<r} M*(phi F) dnu and
/// gap = rho_integral(phi, r) - value, paired on the same batch.
struct PerimeterEntry {
    std::string field_id;
    McEstimate value;
    McEstimate gap;
    bool admissible = true;
    bool pass = false;
};

struct PerimeterReport {
    double r = 0.0;
    McEstimate rho;
    McEstimate q1;
    std::vector<PerimeterEntry> entries;
    bool maximizer_equal = false;   // F = -Mg/|Mg| matches rho within the CI
    bool reversed_strict = false;   // F = +Mg/|Mg| lies more than k SE below rho
    bool pass = false;
};

PerimeterReport perimeter_inequality_check(const OperatorContext& ctx, const LevelFunction& lf, const CylFunction& phi,
                                           double r, const std::vector<VectorField>& fields,
                                           const SampleBatch& batch, double se_multiplier = 4.0);

/// Admissible candidates for the perimeter check: unit constant fields and
/// sin/cos-modulated unit fields, deterministic in `seed`.
std::vector<VectorField> random_unit_fields(const OperatorContext& ctx, std::size_t count, std::uint64_t seed);

struct PositivityEntry {
    double r = 0.0;
    SurfaceDensityEstimate q;
    bool inside = false;
    bool pass = false;
};

struct PositivityReport {
    double g_min = 0.0;
    double g_max = 0.0;
    std::vector<PositivityEntry> entries;
    bool pass = false;
};

PositivityReport q1_positivity_scan(const OperatorContext& ctx, const LevelFunction& lf,
                                    const std::vector<double>& r_grid, const SampleBatch& batch,
                                    double se_multiplier = 4.0);

/// Empirical quantiles of g at the given probabilities (default 0.05, 0.15, ..., 0.95).
std::vector<double> quantile_grid(const LevelFunction& lf, const SampleBatch& batch, std::vector<double> probs = {});

/// Divergence representation of q_phi(r) for the weighted measure w dnu, with
/// M*_w Psi = M*Psi - <M log w, Psi>. `weight` is normalised: int w dnu = 1.
SurfaceDensityEstimate q_divergence_weighted(const OperatorContext& ctx, const LevelFunction& lf,
                                             const CylFunction& phi, const CylFunction& weight, double r,
                                             const SampleBatch& batch);

}  // namespace surfmeas

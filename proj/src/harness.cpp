#include "surfmeas/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "surfmeas/fejer.hpp"
#include "surfmeas/oracle.hpp"
#include "surfmeas/quadrature.hpp"
#include "surfmeas/sampler.hpp"

namespace surfmeas::harness {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

// ---- configuration ---------------------------------------------------------

class Reader {
public:
    std::vector<std::string> problems;

    const json* section(const json& root, const char* key, const std::vector<std::string>& allowed) {
        if (!root.contains(key)) return nullptr;
        const json& s = root.at(key);
        if (!s.is_object()) {
            problems.push_back(std::string(key) + ": expected an object");
            return nullptr;
        }
        check_keys(s, key, allowed);
        return &s;
    }

    void check_keys(const json& obj, const std::string& path, const std::vector<std::string>& allowed) {
        for (const auto& [k, v] : obj.items())
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
                problems.push_back(path + "." + k + ": unknown key (allowed: " + join(allowed, ", ") + ")");
    }

    template <class T>
    bool get(const json* obj, const char* key, const std::string& path, T& out) {
        if (!obj || !obj->contains(key)) return false;
        const json& v = obj->at(key);
        bool ok = true;
        if constexpr (std::is_same_v<T, std::string>) ok = v.is_string();
        else if constexpr (std::is_floating_point_v<T>) ok = v.is_number();
        else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>)
            ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
        else if constexpr (std::is_integral_v<T>) ok = v.is_number_integer();
        else ok = v.is_array();
        if (ok) {
            try {
                out = v.get<T>();
                return true;
            } catch (const json::exception&) {
            }
        }
        problems.push_back(path + "." + key + ": wrong type (" + v.dump() + ")");
        return false;
    }

    void require(bool cond, const std::string& msg) {
        if (!cond) problems.push_back(msg);
    }
};

LevelKind parse_kind(const std::string& s) {
    if (s == "sphere") return LevelKind::Sphere;
    if (s == "hyperplane") return LevelKind::Hyperplane;
    throw FormatError("unknown level function kind '" + s + "' (expected sphere or hyperplane)");
}

std::string reading_name(SphereDivReading r) { return r == SphereDivReading::QxSquared ? "qx_squared" : "q2x_squared"; }

bool multiple_of(double t, double dt) { return std::abs(t / dt - std::round(t / dt)) < 1e-9; }

// ---- records ---------------------------------------------------------------

Status status_from(const std::string& s) {
    for (Status st : {Status::Pass, Status::Fail, Status::Blocked, Status::Error})
        if (to_string(st) == s) return st;
    throw FormatError("unknown record status '" + s + "'");
}

json record_json(const TestRecord& r) {
    return {{"id", r.id},
            {"suite", r.suite},
            {"anchor", r.anchor},
            {"estimate", r.estimate},
            {"std_error", r.std_error},
            {"tolerance", r.tolerance},
            {"status", to_string(r.status)},
            {"detail", r.detail}};
}

std::vector<double> default_b(std::size_t n) {
    std::vector<double> b(n, 0.0);
    const double base[] = {1.0, -0.5, 0.25};
    for (std::size_t h = 0; h < std::min<std::size_t>(n, 3); ++h) b[h] = base[h];
    return b;
}

constexpr double kPi = std::numbers::pi;

double normal_density(double r, double var) { return std::exp(-r * r / (2.0 * var)) / std::sqrt(2.0 * kPi * var); }

// ---- suite runner -----------------------------------------------------------

class Runner {
public:
    explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg), law_(cfg.measure.law()), ctx_(law_) {}

    AcceptanceReport finish() {
        rep_.fingerprint = {{"tool_version", kToolVersion},
                            {"schema_version", kSchemaVersion},
                            {"seed", cfg_.batches.seed},
                            {"sde_seed", cfg_.sde.config.seed},
                            {"resolved_config", to_json(cfg_)}};
        return std::move(rep_);
    }

    void suite(const std::string& name) {
        if (name == "moments") moments();
        else if (name == "ibp") ibp();
        else if (name == "divergence") divergence();
        else if (name == "surface") surface();
        else if (name == "perimeter") perimeter();
        else if (name == "sde") sde();
        else if (name == "fejer") fejer();
        else throw PreconditionError("unknown suite '" + name + "'");
    }

    void divergence() {
        if (divergence_done_) return;
        divergence_done_ = true;
        const auto battery = cyl::standard_battery(n(), cfg_.batches.seed + 1);
        for (LevelKind kind : cfg_.level.kinds) {
            const std::string base = "divergence/" + to_string(kind);
            guarded("divergence", base, "adjoint identity of M*Psi", [&] {
                LevelFunction lf = make_level(kind, cfg_.level.sphere_reading);
                const auto cert = certify_level(ctx_, lf, battery, samples(), policy());
                const bool quadrature = !cert.records.empty() && cert.records.front().operation == "divergence_quadrature";
                for (const auto& r : cert.records) {
                    TestRecord t = make(base + "/" + r.phi_id, "divergence", "adjoint identity of M*Psi", r.estimate);
                    t.tolerance = quadrature ? 1e-6 : cfg_.tolerance.se_multiplier * r.estimate.std_error;
                    t.status = r.pass ? Status::Pass : Status::Fail;
                    t.detail = quadrature ? "deterministic quadrature, relative tolerance" : "Monte Carlo residual";
                    rep_.records.push_back(std::move(t));
                }
                TestRecord mean = make(base + "/mean", "divergence", "int M*Psi dnu = 0", cert.divergence_mean);
                mean.tolerance = quadrature ? 1e-6 : cfg_.tolerance.se_multiplier * cert.divergence_mean.std_error;
                mean.status = cert.certified ? Status::Pass : Status::Fail;
                mean.detail = cert.certified ? "field certified" : "field not certified";
                rep_.records.push_back(std::move(mean));
                if (kind == LevelKind::Sphere) {
                    std::vector<std::string> verdicts;
                    for (auto reading : {SphereDivReading::QxSquared, SphereDivReading::Q2xSquared}) {
                        bool ok = cert.certified;
                        if (reading != cfg_.level.sphere_reading) {
                            LevelFunction alt = make_level(kind, reading);
                            const std::vector<CylFunction> probe{battery[0], battery[5], battery[7]};
                            ok = certify_level(ctx_, alt, probe, samples(), policy()).certified;
                        }
                        verdicts.push_back(to_string(reading) + (ok ? " consistent" : " rejected"));
                    }
                    TestRecord rd = make(base + "/reading", "divergence", "second term of M*Psi for the sphere", {});
                    rd.status = cert.certified ? Status::Pass : Status::Fail;
                    rd.detail = "configured " + to_string(cfg_.level.sphere_reading) + "; " + join(verdicts, "; ");
                    rep_.records.push_back(std::move(rd));
                }
                certified_[kind] = cert.certified;
                if (cert.certified) levels_.emplace(kind, std::move(lf));
            });
        }
    }

private:
    const ExperimentConfig& cfg_;
    ProductLaw law_;
    OperatorContext ctx_;
    std::optional<SampleBatch> batch_;
    std::map<LevelKind, LevelFunction> levels_;
    std::map<LevelKind, bool> certified_;
    bool divergence_done_ = false;
    AcceptanceReport rep_;

    std::size_t n() const { return law_.dim(); }
    double k() const { return cfg_.tolerance.se_multiplier; }
    TolerancePolicy policy() const { return {cfg_.tolerance.se_multiplier, cfg_.tolerance.se_cap}; }

    const SampleBatch& samples() {
        if (!batch_) batch_ = sample_product(law_, cfg_.batches.count, cfg_.batches.seed);
        return *batch_;
    }

    LevelFunction make_level(LevelKind kind, SphereDivReading reading) const {
        return kind == LevelKind::Sphere ? sphere_level(ctx_, reading) : hyperplane_level(ctx_, cfg_.level.b);
    }

    static TestRecord make(std::string id, std::string suite, std::string anchor, const McEstimate& e) {
        TestRecord t;
        t.id = std::move(id);
        t.suite = std::move(suite);
        t.anchor = std::move(anchor);
        t.estimate = e.value;
        t.std_error = e.std_error;
        return t;
    }

    void push_mc(std::string id, std::string suite, std::string anchor, const McEstimate& e, double allowance = 0.0,
                 bool use_cap = false) {
        TestRecord t = make(std::move(id), std::move(suite), std::move(anchor), e);
        t.tolerance = k() * e.std_error + allowance;
        bool ok = std::abs(e.value) <= t.tolerance;
        if (use_cap && e.std_error > cfg_.tolerance.se_cap) {
            ok = false;
            t.detail = "standard error above cap " + format_number(cfg_.tolerance.se_cap);
        }
        t.status = ok ? Status::Pass : Status::Fail;
        rep_.records.push_back(std::move(t));
    }

    void push_value(std::string id, std::string suite, std::string anchor, double value, double tolerance, bool ok,
                    std::string detail = {}) {
        TestRecord t;
        t.id = std::move(id);
        t.suite = std::move(suite);
        t.anchor = std::move(anchor);
        t.estimate = value;
        t.tolerance = tolerance;
        t.status = ok ? Status::Pass : Status::Fail;
        t.detail = std::move(detail);
        rep_.records.push_back(std::move(t));
    }

    void guarded(const std::string& suite, const std::string& id, const std::string& anchor, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            TestRecord t;
            t.id = id;
            t.suite = suite;
            t.anchor = anchor;
            t.status = Status::Error;
            t.detail = e.what();
            rep_.records.push_back(std::move(t));
        }
    }

    // Returns the certified level function, or records the suite as blocked.
    const LevelFunction* gate(const std::string& suite, LevelKind kind) {
        divergence();
        const auto it = levels_.find(kind);
        if (it != levels_.end()) return &it->second;
        TestRecord t;
        t.id = suite + "/" + to_string(kind);
        t.suite = suite;
        t.anchor = "requires a certified divergence";
        t.status = Status::Blocked;
        t.detail = "divergence certification for " + to_string(kind) + " failed";
        rep_.records.push_back(std::move(t));
        return nullptr;
    }

    void moments() {
        Artifact a{"moments", {"h", "mu", "N", "exact", "sample_mean", "std_error", "quadrature"}, {}};
        const int m = law_.m();
        for (std::size_t h = 0; h < std::min<std::size_t>(n(), 3); ++h) {
            const OneDimLaw one = law_.coordinate(h);
            for (int N = 1; N <= 3; ++N) {
                const std::string id = "moments/h" + std::to_string(h + 1) + "/N" + std::to_string(N);
                guarded("moments", id, "2N-th absolute moment", [&] {
                    const double exact = moment(m, one.mu(), N);
                    auto e = batch_mean(samples(), [&](ConstSpan x) { return std::pow(x[h] * x[h], N); });
                    const double mean = e.value;
                    e.value -= exact;
                    push_mc(id + "/sample", "moments", "2N-th absolute moment b_{m,N} mu^{N/m}", e);
                    const double q = quad::integrate_real_line(
                        [&](double x) { return std::pow(x * x, N) * one.density(x); }, 1e-13);
                    const double rel = std::abs(q / exact - 1.0);
                    push_value(id + "/quadrature", "moments", "2N-th absolute moment b_{m,N} mu^{N/m}", rel,
                               cfg_.tolerance.quadrature_rel, rel <= cfg_.tolerance.quadrature_rel, "relative error");
                    a.rows.push_back({std::to_string(h + 1), format_number(one.mu()), std::to_string(N),
                                      format_number(exact), format_number(mean), format_number(e.std_error),
                                      format_number(q)});
                });
            }
        }
        rep_.artifacts.push_back(std::move(a));
    }

    std::vector<std::vector<double>> directions(std::uint64_t stream) const {
        std::vector<double> e1(n(), 0.0);
        e1[0] = 1.0;
        RandomStream rng(cfg_.batches.seed, stream);
        std::vector<double> z(n());
        double norm = 0.0;
        for (auto& v : z) {
            v = rng.normal();
            norm += v * v;
        }
        for (auto& v : z) v /= std::sqrt(norm);
        return {e1, z};
    }

    void ibp() {
        Artifact a{"ibp", {"phi", "z", "value", "std_error", "n_samples", "seed"}, {}};
        const auto battery = cyl::standard_battery(n(), cfg_.batches.seed);
        const auto zs = directions(0x1B9);
        for (std::size_t j = 0; j < zs.size(); ++j) {
            for (const auto& phi : battery) {
                const std::string id = "ibp/z" + std::to_string(j) + "/" + phi.id;
                guarded("ibp", id, "whole-space integration by parts", [&] {
                    const auto e = ibp_residual(ctx_, phi, zs[j], samples());
                    push_mc(id, "ibp", "whole-space integration by parts", e, 0.0, true);
                    a.rows.push_back({phi.id, std::to_string(j), format_number(e.value), format_number(e.std_error),
                                      std::to_string(e.n_samples), std::to_string(e.seed)});
                });
            }
        }
        if (n() == 1) {
            for (const auto& phi : battery) {
                const std::string id = "ibp/quadrature/" + phi.id;
                guarded("ibp", id, "whole-space integration by parts", [&] {
                    const auto q = oracle::ibp_identity_1d(ctx_, phi, 1.0);
                    push_value(id, "ibp", "whole-space integration by parts", q.relative_gap(),
                               cfg_.tolerance.quadrature_rel, q.relative_gap() <= cfg_.tolerance.quadrature_rel,
                               "relative gap by quadrature");
                });
            }
        }
        rep_.artifacts.push_back(std::move(a));
    }

    void surface() {
        Artifact a{"surface", {"kind", "m", "n", "r", "method", "value", "std_error", "n_samples", "seed"}, {}};
        for (LevelKind kind : cfg_.level.kinds) {
            const LevelFunction* lf = gate("surface", kind);
            if (!lf) continue;
            const std::string base = "surface/" + to_string(kind);
            const auto one = cyl::constant(n(), 1.0);
            auto row = [&](double r, const std::string& method, double value, double se, std::size_t count,
                           std::uint64_t seed) {
                a.rows.push_back({to_string(kind), std::to_string(law_.m()), std::to_string(n()), format_number(r),
                                  method, format_number(value), format_number(se), std::to_string(count),
                                  std::to_string(seed)});
            };
            std::vector<double> grid;
            guarded("surface", base + "/grid", "quantile grid", [&] { grid = quantile_grid(*lf, samples(), cfg_.r_grid.probabilities); });
            auto sorted = level_values(*lf, samples());
            std::sort(sorted.begin(), sorted.end());
            const std::optional<double> variance = [&]() -> std::optional<double> {
                if (law_.m() != 1 || kind != LevelKind::Hyperplane) return std::nullopt;
                double v = 0.0;
                for (std::size_t h = 0; h < n(); ++h) v += cfg_.level.b[h] * cfg_.level.b[h] * law_.weight(h);
                return v;
            }();
            const bool sphere_oracle = law_.m() == 1 && kind == LevelKind::Sphere && (n() == 2 || n() == 3);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double r = grid[i];
                const std::string id = base + "/r" + std::to_string(i);
                guarded("surface", id, "surface density q_1(r)", [&] {
                    const auto qd = q_divergence(ctx_, *lf, one, r, samples());
                    row(r, "divergence", qd.value, qd.std_error, qd.n_samples, qd.seed);
                    const double h = default_bandwidth(sorted, r);
                    const auto qf = q_smoothed_fd(*lf, one, r, samples(), h);
                    row(r, "smoothed_fd", qf.value, qf.std_error, qf.n_samples, qf.seed);
                    push_mc(id + "/agreement", "surface", "divergence and smoothed-difference estimates agree",
                            q_method_gap(ctx_, *lf, one, r, samples(), h));
                    std::optional<double> exact;
                    if (variance) exact = normal_density(r, *variance);
                    if (sphere_oracle)
                        exact = oracle::coarea_oracle(law_.weights(), [](ConstSpan) { return 1.0; }, kind, {}, one, r);
                    if (exact) {
                        row(r, "oracle", *exact, 0.0, 0, 0);
                        push_mc(id + "/oracle", "surface", "surface density against the Gaussian closed form",
                                McEstimate{qd.value - *exact, qd.std_error, qd.n_samples, qd.seed});
                    }
                });
            }
            const auto battery = cyl::standard_battery(n(), cfg_.batches.seed + 2);
            const auto z = directions(0x5B1)[1];
            const auto ibp_grid = quantile_grid(*lf, samples(), {0.3, 0.7});
            for (std::size_t i = 0; i < ibp_grid.size(); ++i)
                for (const auto& phi : battery) {
                    const std::string id = base + "/sublevel_ibp/r" + std::to_string(i) + "/" + phi.id;
                    guarded("surface", id, "integration by parts on sublevel sets", [&] {
                        push_mc(id, "surface", "integration by parts on sublevel sets",
                                ibp_sublevel_residual(ctx_, *lf, phi, z, ibp_grid[i], samples()));
                    });
                }
            guarded("surface", base + "/positivity", "q_1 > 0 inside the range of g", [&] {
                auto pgrid = grid;
                pgrid.push_back(sorted.back() + 1.0);
                pgrid.push_back(kind == LevelKind::Sphere ? -1.0 : sorted.front() - 1.0);
                const auto rep = q1_positivity_scan(ctx_, *lf, pgrid, samples(), k());
                std::size_t failed = 0;
                for (const auto& e : rep.entries) failed += e.pass ? 0 : 1;
                push_value(base + "/positivity", "surface", "q_1 > 0 inside the range of g", static_cast<double>(failed),
                           0.0, rep.pass, std::to_string(rep.entries.size()) + " levels scanned");
            });
        }
        rep_.artifacts.push_back(std::move(a));
    }

    void perimeter() {
        Artifact a{"perimeter", {"kind", "r", "field", "value", "gap", "gap_std_error", "pass"}, {}};
        for (LevelKind kind : cfg_.level.kinds) {
            const LevelFunction* lf = gate("perimeter", kind);
            if (!lf) continue;
            const std::string base = "perimeter/" + to_string(kind);
            guarded("perimeter", base, "variational characterisation of rho_r", [&] {
                std::vector<double> coef(n());
                for (std::size_t h = 0; h < n(); ++h) coef[h] = 0.5 / static_cast<double>(h + 1);
                const auto phi = cyl::linear_combination(1.0, cyl::constant(n(), 1.0), 0.5, cyl::cos_linear(coef));
                const double r = quantile_grid(*lf, samples(), {0.5})[0];
                const auto fields = random_unit_fields(ctx_, 20, cfg_.batches.seed);
                const auto rep = perimeter_inequality_check(ctx_, *lf, phi, r, fields, samples(), k());
                for (std::size_t i = 0; i < rep.entries.size(); ++i) {
                    const auto& e = rep.entries[i];
                    TestRecord t = make(base + "/" + std::to_string(i) + ":" + e.field_id, "perimeter",
                                        "int_{g<r} M*(phi F) dnu <= int phi d rho_r", e.gap);
                    t.tolerance = k() * e.gap.std_error;
                    t.status = e.pass ? Status::Pass : Status::Fail;
                    rep_.records.push_back(std::move(t));
                    a.rows.push_back({to_string(kind), format_number(r), e.field_id, format_number(e.value.value),
                                      format_number(e.gap.value), format_number(e.gap.std_error), e.pass ? "1" : "0"});
                }
                push_value(base + "/maximizer", "perimeter", "equality at F = -Mg/|Mg|", rep.rho.value, 0.0,
                           rep.maximizer_equal);
                push_value(base + "/reversed", "perimeter", "strict gap for F = +Mg/|Mg|", rep.q1.value, 0.0,
                           rep.reversed_strict);
            });
        }
        rep_.artifacts.push_back(std::move(a));
    }

    void sde() {
        const SdeConfig& sc = cfg_.sde.config;
        const int m = law_.m();
        {
            Artifact a{"invariance", {"phi", "time", "value", "std_error", "allowance"}, {}};
            std::vector<double> coef(n());
            for (std::size_t h = 0; h < n(); ++h) coef[h] = 0.6 / static_cast<double>(h + 1);
            const auto x1 = cyl::coordinate(n(), 0);
            const std::vector<CylFunction> phis{cyl::product(x1, x1), cyl::norm2_saturated(n()), cyl::cos_linear(coef)};
            guarded("sde", "sde/invariance", "invariance of nu under the semigroup", [&] {
                const auto res = invariance_residuals(law_, phis, cfg_.sde.times, sc);
                const double bias = sc.scheme == Scheme::ExactOu ? 0.0 : cfg_.sde.bias_constant * sc.dt;
                for (std::size_t p = 0; p < phis.size(); ++p)
                    for (std::size_t j = 0; j < cfg_.sde.times.size(); ++j) {
                        const auto& e = res[p][j];
                        push_mc("sde/invariance/" + phis[p].id + "/t" + format_number(cfg_.sde.times[j]), "sde",
                                "invariance of nu under the semigroup", e, bias);
                        a.rows.push_back({phis[p].id, format_number(cfg_.sde.times[j]), format_number(e.value),
                                          format_number(e.std_error), format_number(k() * e.std_error + bias)});
                    }
            });
            rep_.artifacts.push_back(std::move(a));
        }
        guarded("sde", "sde/refinement", "first-order weak bias of the tamed scheme", [&] {
            SdeConfig rc = sc;
            rc.scheme = Scheme::TamedExplicit;
            rc.dt = cfg_.sde.refinement_dt;
            rc.horizon = std::max(rc.horizon, 1.0);
            const auto x1 = cyl::coordinate(n(), 0);
            const auto study = dt_refinement(law_, cyl::product(x1, x1), 1.0, rc, 3);
            const double ratio = study.diffs[0].value / study.diffs[1].value;
            const bool resolved = std::abs(study.diffs[1].value) > k() * study.diffs[1].std_error;
            push_value("sde/refinement", "sde", "first-order weak bias of the tamed scheme", ratio, 0.5,
                       resolved && ratio >= 1.5 && ratio <= 2.5,
                       resolved ? "ratio of successive bias differences, window [1.5, 2.5]"
                                : "bias difference not resolved above noise");
        });
        if (m == 1) {
            guarded("sde", "sde/ks", "exact OU transition preserves nu", [&] {
                SdeConfig ec = sc;
                ec.scheme = Scheme::ExactOu;
                const auto start = ensemble_from_batch(sample_product(law_, ec.ensemble, ec.seed, ec.block_rows));
                const auto snap = evolve(start, law_, ec, {ec.horizon - std::fmod(ec.horizon, ec.dt)}).front();
                for (std::size_t h = 0; h < std::min<std::size_t>(n(), 3); ++h) {
                    std::vector<double> col(snap.count);
                    for (std::size_t i = 0; i < snap.count; ++i) col[i] = snap.row(i)[h];
                    const auto ks = ks_normal(col, law_.weight(h));
                    push_value("sde/ks/h" + std::to_string(h + 1), "sde", "exact OU transition preserves nu",
                               ks.p_value, 1e-3, ks.p_value > 1e-3, "Kolmogorov-Smirnov p-value");
                }
            });
        }
        {
            Artifact a{"moment_bound", {"x0", "time", "mean_norm_sq", "std_error", "bound", "allowance", "pass"}, {}};
            std::vector<double> t_grid;
            for (int i = 0; i <= 10; ++i) t_grid.push_back(std::round(i * sc.horizon / 10.0 / sc.dt) * sc.dt);
            t_grid.erase(std::unique(t_grid.begin(), t_grid.end()), t_grid.end());
            const double big = std::sqrt(10.0 * law_.lambda() / static_cast<double>(n()));
            const std::vector<std::vector<double>> starts{std::vector<double>(n(), 0.0), std::vector<double>(n(), 0.5),
                                                          std::vector<double>(n(), big)};
            for (std::size_t s = 0; s < starts.size(); ++s) {
                const std::string id = "sde/moment_bound/x" + std::to_string(s);
                guarded("sde", id, "E|X_t|^2 <= Lambda_m + |x0|^2", [&] {
                    const auto rep = moment_bound_check(law_, starts[s], t_grid, sc, k());
                    double worst = -1e300;
                    for (const auto& e : rep.entries) {
                        worst = std::max(worst, e.mean_sq.value - e.bound - e.allowance);
                        a.rows.push_back({std::to_string(s), format_number(e.time), format_number(e.mean_sq.value),
                                          format_number(e.mean_sq.std_error), format_number(e.bound),
                                          format_number(e.allowance), e.pass ? "1" : "0"});
                    }
                    push_value(id, "sde", "E|X_t|^2 <= Lambda_m + |x0|^2", worst, 0.0, rep.pass,
                               "largest excess over bound plus allowance");
                });
            }
            rep_.artifacts.push_back(std::move(a));
        }
        guarded("sde", "sde/ode", "v' = 1 - alpha v^m stays below max(alpha^{-1/m}, v0)", [&] {
            RandomStream rng(sc.seed, 0x0DE);
            double worst = -1e300;
            bool ok = true;
            for (std::size_t i = 0; i < cfg_.sde.ode_triples; ++i) {
                const double alpha = 0.1 + 4.9 * rng.uniform();
                const int mm = 1 + static_cast<int>(rng.next_u64() % 4);
                const double v0 = 3.0 * rng.uniform() * std::pow(alpha, -1.0 / mm);
                const auto rep = ode_comparison(alpha, mm, v0, 0.02, 5.0);
                worst = std::max(worst, rep.max_excess);
                ok = ok && rep.pass;
            }
            push_value("sde/ode", "sde", "v' = 1 - alpha v^m stays below max(alpha^{-1/m}, v0)", worst, 1e-8, ok,
                       std::to_string(cfg_.sde.ode_triples) + " random triples");
        });
    }

    void fejer() {
        const auto& fc = cfg_.fejer;
        const std::string anchor_k = "Fejer kernel";
        std::vector<int> kernel_degrees{0};
        kernel_degrees.insert(kernel_degrees.end(), fc.degrees.begin(), fc.degrees.end());
        for (int N : kernel_degrees) {
            const std::string id = "fejer/kernel/N" + std::to_string(N);
            guarded("fejer", id, anchor_k, [&] {
                const double T = 1.0;
                const int nodes = 4 * N + 8;
                double s = 0.0, lo = 1e300;
                for (int i = 0; i < nodes; ++i) s += fejer_kernel_1d(N, T, -0.5 + static_cast<double>(i) / nodes);
                s /= nodes;
                RandomStream rng(cfg_.batches.seed, 0xFE1);
                for (int i = 0; i < 10000; ++i) lo = std::min(lo, fejer_kernel_1d(N, T, rng.uniform() - 0.5));
                push_value(id + "/mass", "fejer", "unit mass of the Fejer kernel", std::abs(s - 1.0), 1e-10,
                           std::abs(s - 1.0) <= 1e-10 && fejer_multiplier(N, 0) == 1.0);
                push_value(id + "/positivity", "fejer", "non-negative Fejer kernel", lo, 0.0, lo >= 0.0,
                           "minimum over 10^4 random points");
            });
        }
        auto cos_f = [](std::span<const double> x) { return std::cos(2.0 * kPi * x[0]); };
        for (int N : fc.degrees) {
            const std::string id = "fejer/cos_factor/N" + std::to_string(N);
            guarded("fejer", id, "triangular multiplier at |k| = 1", [&] {
                const auto p = fejer_approximate(sample_grid(cos_f, 1, 1.0, 0.0, static_cast<std::size_t>(2 * N + 2)), N);
                const double c = 2.0 * p.coefficient(std::vector<int>{1}).real();
                const double err = std::abs(c - (1.0 - 1.0 / (N + 1.0)));
                push_value(id, "fejer", "triangular multiplier at |k| = 1", err, 1e-12, err <= 1e-12);
            });
        }
        // Unit-scale periodic members on the period-one cell.
        struct Member {
            std::string id;
            std::size_t n_vars;
            std::function<double(std::span<const double>)> f;
        };
        const std::vector<Member> members{
            {"cos", 1, cos_f},
            {"exp_sin", 1, [](std::span<const double> x) { return std::exp(std::sin(2.0 * kPi * x[0])); }},
            {"cos_cos", 2, [](std::span<const double> x) { return std::cos(2.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]); }},
        };
        Artifact conv{"fejer_convergence", {"phi", "N", "max_error", "error_times_N_plus_1"}, {}};
        for (const auto& mem : members) {
            const std::string id = "fejer/" + mem.id;
            guarded("fejer", id, "Fejer means", [&] {
                const std::size_t probes = mem.n_vars == 1 ? 257 : 33;
                double prev = 1e300;
                bool decreasing = true;
                bool non_expanding = true;
                double last = 0.0;
                for (int N : fc.degrees) {
                    const std::size_t points = static_cast<std::size_t>(std::max(2 * N + 2, 64));
                    const auto grid = sample_grid(mem.f, mem.n_vars, 1.0, 0.0, points);
                    const auto p = fejer_approximate(grid, N);
                    double err = 0.0, sup_p = 0.0, sup_f = 0.0;
                    std::vector<double> x(mem.n_vars);
                    std::size_t total = 1;
                    for (std::size_t j = 0; j < mem.n_vars; ++j) total *= probes;
                    for (std::size_t i = 0; i < total; ++i) {
                        std::size_t rest = i;
                        for (std::size_t j = 0; j < mem.n_vars; ++j) {
                            x[j] = static_cast<double>(rest % probes) / static_cast<double>(probes - 1) - 0.5;
                            rest /= probes;
                        }
                        const double v = p.value(x);
                        const double fx = mem.f(x);
                        err = std::max(err, std::abs(v - fx));
                        sup_p = std::max(sup_p, std::abs(v));
                        sup_f = std::max(sup_f, std::abs(fx));
                    }
                    for (double v : grid.values) sup_f = std::max(sup_f, std::abs(v));
                    non_expanding = non_expanding && sup_p <= sup_f * (1.0 + 1e-12);
                    decreasing = decreasing && err < prev;
                    prev = err;
                    last = err;
                    conv.rows.push_back({mem.id, std::to_string(N), format_number(err), format_number(err * (N + 1.0))});
                }
                push_value(id + "/non_expansion", "fejer", "sup norm of the Fejer mean is at most sup norm of phi", 0.0,
                           0.0, non_expanding);
                push_value(id + "/convergence", "fejer", "pointwise convergence of Fejer means", last,
                           fc.convergence_threshold, decreasing && last <= fc.convergence_threshold,
                           "error at the largest degree; Fejer means converge at rate O(1/N) for smooth non-constant members");
            });
        }
        rep_.artifacts.push_back(std::move(conv));

        Artifact bounds{"fejer_bounds", {"phi", "k", "degree", "alpha", "constant", "phi_norm", "approx_sup", "pass"}, {}};
        Artifact errors{"fejer_errors", {"phi", "k", "degree", "order", "max_error"}, {}};
        const std::vector<SmoothFunction> phis{
            separable("cos_gauss", {uni::product(uni::cosine(1.0, 0.0), uni::gaussian(1.0 / std::sqrt(2.0)))}),
            separable("exp_sin", {uni::exp_sin(1.0)}),
            separable("gauss2", {uni::gaussian(0.8), uni::gaussian(1.1)}),
        };
        for (const auto& phi : phis) {
            const std::string id = "fejer/approx/" + phi.id;
            guarded("fejer", id, "periodised Fejer approximation with uniform derivative bounds", [&] {
                std::vector<int> ks = fc.k;
                if (phi.n_vars == 2 && ks.size() > 2) ks.resize(2);
                const int h = phi.n_vars == 2 ? std::min(fc.h, 1) : fc.h;
                const auto rep = approx_report(phi, h, ks);
                for (const auto& e : rep.entries) {
                    for (std::size_t o = 0; o < e.max_error.size(); ++o)
                        errors.rows.push_back({phi.id, std::to_string(e.k), std::to_string(e.degree), std::to_string(o),
                                               format_number(e.max_error[o])});
                    for (const auto& b : e.bounds) {
                        std::vector<std::string> al;
                        for (int v : b.alpha) al.push_back(std::to_string(v));
                        bounds.rows.push_back({phi.id, std::to_string(e.k), std::to_string(e.degree), join(al, " "),
                                               format_number(b.constant), format_number(b.phi_norm),
                                               format_number(b.approx_sup), b.pass ? "1" : "0"});
                    }
                }
                push_value(id + "/decreasing", "fejer", "probe error decreases in k", rep.entries.back().max_error[0], 0.0,
                           rep.errors_decreasing);
                push_value(id + "/bounds", "fejer", "|D^alpha phi_k| <= C_alpha max_{beta<=alpha} |D^beta phi|", 0.0, 0.0,
                           rep.bounds_hold);
            });
        }
        rep_.artifacts.push_back(std::move(errors));
        rep_.artifacts.push_back(std::move(bounds));
    }
};

}  // namespace

ConfigError::ConfigError(std::vector<std::string> p)
    : Error("invalid configuration:\n  " + join(p, "\n  ")), problems(std::move(p)) {}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"moments", "ibp", "divergence", "surface", "perimeter", "sde", "fejer"};
    return names;
}

ProductLaw MeasureSpec::law() const {
    return weights.empty() ? ProductLaw::power_weights(m, n, c, s) : ProductLaw(m, weights);
}

ExperimentConfig parse_config(const json& j) {
    Reader rd;
    ExperimentConfig c;
    if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
    rd.check_keys(j, "config",
                  {"measure", "level_function", "batches", "sde", "r_grid", "tolerance", "fejer", "suites", "output_dir"});

    const json* ms = rd.section(j, "measure", {"m", "n", "weights"});
    rd.get(ms, "m", "measure", c.measure.m);
    rd.require(c.measure.m >= 1 && c.measure.m <= 8, "measure.m: must be an integer in [1, 8]");
    rd.get(ms, "n", "measure", c.measure.n);
    rd.require(c.measure.n >= 1 && c.measure.n <= 4096, "measure.n: must be in [1, 4096]");
    c.measure.s = 1.5 * c.measure.m;
    if (ms && ms->contains("weights")) {
        const json& w = ms->at("weights");
        if (w.is_array()) {
            rd.get(ms, "weights", "measure", c.measure.weights);
            rd.require(c.measure.weights.size() == c.measure.n, "measure.weights: needs exactly n entries");
            for (double v : c.measure.weights) rd.require(v > 0.0 && std::isfinite(v), "measure.weights: entries must be positive");
        } else if (w.is_object()) {
            rd.check_keys(w, "measure.weights", {"c", "s"});
            rd.get(&w, "c", "measure.weights", c.measure.c);
            rd.get(&w, "s", "measure.weights", c.measure.s);
            rd.require(c.measure.c > 0.0, "measure.weights.c: must be positive");
            rd.require(std::isfinite(c.measure.s), "measure.weights.s: must be finite");
        } else {
            rd.problems.push_back("measure.weights: expected a list or {c, s}");
        }
    }

    const json* ls = rd.section(j, "level_function", {"kinds", "b", "sphere_reading"});
    std::vector<std::string> kinds;
    if (rd.get(ls, "kinds", "level_function", kinds)) {
        c.level.kinds.clear();
        std::set<std::string> seen;
        for (const auto& k : kinds) {
            try {
                c.level.kinds.push_back(parse_kind(k));
                rd.require(seen.insert(k).second, "level_function.kinds: duplicate '" + k + "'");
            } catch (const FormatError& e) {
                rd.problems.push_back(std::string("level_function.kinds: ") + e.what());
            }
        }
        rd.require(!kinds.empty(), "level_function.kinds: must not be empty");
    }
    for (LevelKind k : c.level.kinds)
        rd.require(k != LevelKind::Sphere || c.measure.n >= 2, "level_function.kinds: sphere needs measure.n >= 2");
    c.level.b = default_b(c.measure.n);
    if (rd.get(ls, "b", "level_function", c.level.b)) {
        rd.require(c.level.b.size() == c.measure.n, "level_function.b: needs exactly n entries");
        double norm = 0.0;
        for (double v : c.level.b) norm += v * v;
        rd.require(norm > 0.0, "level_function.b: must be non-zero");
    }
    std::string reading;
    if (rd.get(ls, "sphere_reading", "level_function", reading)) {
        if (reading == "qx_squared") c.level.sphere_reading = SphereDivReading::QxSquared;
        else if (reading == "q2x_squared") c.level.sphere_reading = SphereDivReading::Q2xSquared;
        else rd.problems.push_back("level_function.sphere_reading: expected qx_squared or q2x_squared");
    }

    const json* bs = rd.section(j, "batches", {"count", "seed"});
    rd.get(bs, "count", "batches", c.batches.count);
    rd.require(c.batches.count >= 1000, "batches.count: must be at least 1000");
    rd.get(bs, "seed", "batches", c.batches.seed);

    const json* ss = rd.section(j, "sde", {"dt", "horizon", "scheme", "ensemble", "seed", "block_rows", "times",
                                           "bias_constant", "refinement_dt", "ode_triples"});
    auto& sc = c.sde.config;
    rd.get(ss, "dt", "sde", sc.dt);
    rd.get(ss, "horizon", "sde", sc.horizon);
    std::string scheme;
    if (rd.get(ss, "scheme", "sde", scheme)) {
        try {
            sc.scheme = parse_scheme(scheme);
        } catch (const FormatError& e) {
            rd.problems.push_back(std::string("sde.scheme: ") + e.what());
        }
    }
    rd.get(ss, "ensemble", "sde", sc.ensemble);
    rd.get(ss, "seed", "sde", sc.seed);
    rd.get(ss, "block_rows", "sde", sc.block_rows);
    rd.require(sc.block_rows >= 1, "sde.block_rows: must be positive");
    try {
        validate(sc, c.measure.m);
    } catch (const PreconditionError& e) {
        rd.problems.push_back(std::string("sde: ") + e.what());
    }
    rd.get(ss, "times", "sde", c.sde.times);
    rd.require(!c.sde.times.empty(), "sde.times: must not be empty");
    for (std::size_t i = 0; i < c.sde.times.size(); ++i) {
        const double t = c.sde.times[i];
        rd.require(t > 0.0 && t <= sc.horizon + 1e-12, "sde.times: " + format_number(t) + " outside (0, horizon]");
        rd.require(sc.dt <= 0.0 || multiple_of(t, sc.dt), "sde.times: " + format_number(t) + " is not a multiple of dt");
        rd.require(i == 0 || t > c.sde.times[i - 1], "sde.times: must be strictly increasing");
    }
    rd.get(ss, "bias_constant", "sde", c.sde.bias_constant);
    rd.require(c.sde.bias_constant >= 0.0, "sde.bias_constant: must be non-negative");
    rd.get(ss, "refinement_dt", "sde", c.sde.refinement_dt);
    rd.require(c.sde.refinement_dt > 0.0 && c.sde.refinement_dt <= 1.0 && multiple_of(1.0, c.sde.refinement_dt),
               "sde.refinement_dt: must divide 1");
    rd.get(ss, "ode_triples", "sde", c.sde.ode_triples);

    const json* rs = rd.section(j, "r_grid", {"probabilities"});
    rd.get(rs, "probabilities", "r_grid", c.r_grid.probabilities);
    rd.require(!c.r_grid.probabilities.empty(), "r_grid.probabilities: must not be empty");
    for (std::size_t i = 0; i < c.r_grid.probabilities.size(); ++i) {
        const double p = c.r_grid.probabilities[i];
        rd.require(p > 0.0 && p < 1.0, "r_grid.probabilities: entries must lie in (0, 1)");
        rd.require(i == 0 || p > c.r_grid.probabilities[i - 1], "r_grid.probabilities: must be strictly increasing");
    }

    const json* ts = rd.section(j, "tolerance", {"se_multiplier", "se_cap", "quadrature_rel"});
    rd.get(ts, "se_multiplier", "tolerance", c.tolerance.se_multiplier);
    rd.get(ts, "se_cap", "tolerance", c.tolerance.se_cap);
    rd.get(ts, "quadrature_rel", "tolerance", c.tolerance.quadrature_rel);
    rd.require(c.tolerance.se_multiplier > 0.0, "tolerance.se_multiplier: must be positive");
    rd.require(c.tolerance.se_cap > 0.0, "tolerance.se_cap: must be positive");
    rd.require(c.tolerance.quadrature_rel > 0.0, "tolerance.quadrature_rel: must be positive");

    const json* fs = rd.section(j, "fejer", {"k", "h", "degrees", "convergence_threshold"});
    rd.get(fs, "k", "fejer", c.fejer.k);
    rd.require(!c.fejer.k.empty(), "fejer.k: must not be empty");
    for (std::size_t i = 0; i < c.fejer.k.size(); ++i) {
        rd.require(c.fejer.k[i] >= 3 && c.fejer.k[i] <= 15, "fejer.k: entries must lie in [3, 15]");
        rd.require(i == 0 || c.fejer.k[i] > c.fejer.k[i - 1], "fejer.k: must be strictly increasing");
    }
    rd.get(fs, "h", "fejer", c.fejer.h);
    rd.require(c.fejer.h >= 0 && c.fejer.h <= 4, "fejer.h: must lie in [0, 4]");
    rd.get(fs, "degrees", "fejer", c.fejer.degrees);
    rd.require(!c.fejer.degrees.empty(), "fejer.degrees: must not be empty");
    for (std::size_t i = 0; i < c.fejer.degrees.size(); ++i) {
        rd.require(c.fejer.degrees[i] >= 1 && c.fejer.degrees[i] <= 4096, "fejer.degrees: entries must lie in [1, 4096]");
        rd.require(i == 0 || c.fejer.degrees[i] > c.fejer.degrees[i - 1], "fejer.degrees: must be strictly increasing");
    }
    rd.get(fs, "convergence_threshold", "fejer", c.fejer.convergence_threshold);
    rd.require(c.fejer.convergence_threshold > 0.0, "fejer.convergence_threshold: must be positive");

    std::vector<std::string> suites;
    if (j.contains("suites") && rd.get(&j, "suites", "config", suites)) {
        std::set<std::string> seen;
        c.suites.clear();
        for (const auto& s : suite_names())
            if (std::find(suites.begin(), suites.end(), s) != suites.end()) c.suites.push_back(s);
        for (const auto& s : suites) {
            rd.require(std::find(suite_names().begin(), suite_names().end(), s) != suite_names().end(),
                       "suites: unknown suite '" + s + "' (known: " + join(suite_names(), ", ") + ")");
            rd.require(seen.insert(s).second, "suites: duplicate '" + s + "'");
        }
    }
    if (j.contains("output_dir")) rd.get(&j, "output_dir", "config", c.output_dir);

    if (!rd.problems.empty()) throw ConfigError(rd.problems);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open configuration file " + path.string()});
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({path.string() + ": " + e.what()});
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    json measure{{"m", c.measure.m}, {"n", c.measure.n}};
    if (c.measure.weights.empty()) measure["weights"] = {{"c", c.measure.c}, {"s", c.measure.s}};
    else measure["weights"] = c.measure.weights;
    std::vector<std::string> kinds;
    for (LevelKind k : c.level.kinds) kinds.push_back(to_string(k));
    const auto& sc = c.sde.config;
    return {{"measure", measure},
            {"level_function",
             {{"kinds", kinds}, {"b", c.level.b}, {"sphere_reading", reading_name(c.level.sphere_reading)}}},
            {"batches", {{"count", c.batches.count}, {"seed", c.batches.seed}}},
            {"sde",
             {{"dt", sc.dt},
              {"horizon", sc.horizon},
              {"scheme", to_string(sc.scheme)},
              {"ensemble", sc.ensemble},
              {"seed", sc.seed},
              {"block_rows", sc.block_rows},
              {"times", c.sde.times},
              {"bias_constant", c.sde.bias_constant},
              {"refinement_dt", c.sde.refinement_dt},
              {"ode_triples", c.sde.ode_triples}}},
            {"r_grid", {{"probabilities", c.r_grid.probabilities}}},
            {"tolerance",
             {{"se_multiplier", c.tolerance.se_multiplier},
              {"se_cap", c.tolerance.se_cap},
              {"quadrature_rel", c.tolerance.quadrature_rel}}},
            {"fejer",
             {{"k", c.fejer.k},
              {"h", c.fejer.h},
              {"degrees", c.fejer.degrees},
              {"convergence_threshold", c.fejer.convergence_threshold}}},
            {"suites", c.suites},
            {"output_dir", c.output_dir}};
}

std::string to_string(Status s) {
    switch (s) {
        case Status::Pass: return "pass";
        case Status::Fail: return "fail";
        case Status::Blocked: return "blocked";
        case Status::Error: return "error";
    }
    return "error";
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string Artifact::to_csv() const {
    std::string out = join(columns, ",") + "\n";
    for (const auto& r : rows) out += join(r, ",") + "\n";
    return out;
}

json Artifact::to_json() const {
    json rs = json::array();
    for (const auto& r : rows) {
        json o = json::object();
        for (std::size_t i = 0; i < columns.size() && i < r.size(); ++i) o[columns[i]] = r[i];
        rs.push_back(std::move(o));
    }
    return {{"name", name}, {"columns", columns}, {"rows", rs}};
}

bool AcceptanceReport::pass() const {
    return std::all_of(records.begin(), records.end(), [](const TestRecord& r) { return r.status == Status::Pass; });
}

std::size_t AcceptanceReport::count(Status s) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [s](const TestRecord& r) { return r.status == s; }));
}

json AcceptanceReport::to_json() const {
    json recs = json::array();
    std::size_t statistical = 0;
    for (const auto& r : records) {
        recs.push_back(record_json(r));
        statistical += r.std_error > 0.0 ? 1 : 0;
    }
    std::vector<std::string> names;
    for (const auto& a : artifacts) names.push_back(a.name);
    // two-sided normal tail beyond 4 sigma
    const double per_test = std::erfc(4.0 / std::sqrt(2.0));
    return {{"schema_version", kSchemaVersion},
            {"fingerprint", fingerprint},
            {"verdict", pass() ? "pass" : "fail"},
            {"counts",
             {{"pass", count(Status::Pass)},
              {"fail", count(Status::Fail)},
              {"blocked", count(Status::Blocked)},
              {"error", count(Status::Error)}}},
            {"multiple_testing_note",
             std::to_string(statistical) + " statistical tests at 4 SE, each with false-failure probability " +
                 format_number(per_test) + "; Bonferroni bound on any false failure " +
                 format_number(std::min(1.0, per_test * static_cast<double>(statistical)))},
            {"artifacts", names},
            {"records", recs}};
}

AcceptanceReport AcceptanceReport::from_json(const json& j) {
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion) throw FormatError("report: unsupported schema_version");
        AcceptanceReport rep;
        rep.fingerprint = j.at("fingerprint");
        for (const auto& r : j.at("records")) {
            TestRecord t;
            t.id = r.at("id").get<std::string>();
            t.suite = r.at("suite").get<std::string>();
            t.anchor = r.at("anchor").get<std::string>();
            t.estimate = r.at("estimate").get<double>();
            t.std_error = r.at("std_error").get<double>();
            t.tolerance = r.at("tolerance").get<double>();
            t.status = status_from(r.at("status").get<std::string>());
            t.detail = r.at("detail").get<std::string>();
            rep.records.push_back(std::move(t));
        }
        return rep;
    } catch (const json::exception& e) {
        throw FormatError(std::string("report: ") + e.what());
    }
}

AcceptanceReport run(const ExperimentConfig& config) {
    Runner runner(config);
    for (const auto& s : suite_names())
        if (std::find(config.suites.begin(), config.suites.end(), s) != config.suites.end()) runner.suite(s);
    return runner.finish();
}

AcceptanceReport run_suite(const ExperimentConfig& config, const std::string& suite) {
    Runner runner(config);
    runner.suite(suite);
    return runner.finish();
}

void write_outputs(const AcceptanceReport& report, const ExperimentConfig& config, const std::filesystem::path& dir,
                   const std::string& tag, const std::string& format) {
    if (format != "csv" && format != "json") throw PreconditionError("format must be csv or json");
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw FormatError("cannot write " + (dir / name).string());
        out << body;
    };
    write("report-" + tag + ".json", report.to_json().dump(2) + "\n");
    write("config-" + tag + ".json", to_json(config).dump(2) + "\n");
    for (const auto& a : report.artifacts)
        write(tag + "-" + a.name + "." + format, format == "csv" ? a.to_csv() : a.to_json().dump(2) + "\n");
}

AcceptanceReport aggregate_reports(const std::filesystem::path& dir, std::size_t* found) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(dir))
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            const auto name = e.path().filename().string();
            if (name.rfind("report-", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
        }
    std::sort(files.begin(), files.end());
    if (found) *found = files.size();
    AcceptanceReport out;
    json sources = json::array();
    for (const auto& f : files) {
        std::ifstream in(f);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw FormatError(f.string() + ": " + e.what());
        }
        auto rep = AcceptanceReport::from_json(j);
        sources.push_back({{"file", f.filename().string()}, {"fingerprint", rep.fingerprint}});
        for (auto& r : rep.records) out.records.push_back(std::move(r));
    }
    out.fingerprint = {{"tool_version", kToolVersion}, {"schema_version", kSchemaVersion}, {"sources", sources}};
    return out;
}

}  // namespace surfmeas::harness

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "surfmeas/calculus.hpp"
#include "surfmeas/dynamics.hpp"
#include "surfmeas/errors.hpp"
#include "surfmeas/surface.hpp"

namespace surfmeas::harness {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";
/// Environment variable naming the default output directory.
inline constexpr const char* kOutputEnv = "SURFMEAS_OUT";

/// Every problem found while validating a configuration, reported together.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    std::vector<std::string> problems;
};

/// The suites in execution order. Divergence runs before the surface suites it gates.
const std::vector<std::string>& suite_names();

struct MeasureSpec {
    int m = 1;
    std::size_t n = 2;
    double c = 1.0;
    double s = 1.5;              // defaults to 1.5 m
    std::vector<double> weights;  // explicit mu_h; overrides c and s when non-empty

    ProductLaw law() const;
};

struct LevelSpec {
    std::vector<LevelKind> kinds{LevelKind::Sphere, LevelKind::Hyperplane};
    std::vector<double> b;  // hyperplane normal, defaults to (1, -1/2, 1/4, 0, ...)
    SphereDivReading sphere_reading = SphereDivReading::QxSquared;
};

struct BatchSpec {
    std::size_t count = 200000;
    std::uint64_t seed = 2024;
};

struct SdeSpec {
    SdeConfig config{0.01, 5.0, Scheme::TamedExplicit, 20000, 1, kDefaultBlockRows};
    std::vector<double> times{1.0, 5.0};
    double bias_constant = 1.5;  // invariance allowance k SE + bias_constant * dt
    double refinement_dt = 0.05;
    std::size_t ode_triples = 50;
};

struct RGridSpec {
    std::vector<double> probabilities{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

struct TolerancePolicySpec {
    double se_multiplier = 4.0;
    double se_cap = 5e-2;
    double quadrature_rel = 1e-8;
};

struct FejerSpec {
    std::vector<int> k{3, 5, 7};
    int h = 2;
    std::vector<int> degrees{8, 32, 128};
    double convergence_threshold = 1e-3;
};

struct ExperimentConfig {
    MeasureSpec measure;
    LevelSpec level;
    BatchSpec batches;
    SdeSpec sde;
    RGridSpec r_grid;
    TolerancePolicySpec tolerance;
    FejerSpec fejer;
    std::vector<std::string> suites = suite_names();
    std::string output_dir;
};

/// Validates and fills defaults. Throws ConfigError listing every problem.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Fully resolved configuration; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& c);

enum class Status { Pass, Fail, Blocked, Error };
std::string to_string(Status s);

struct TestRecord {
    std::string id;
    std::string suite;
    std::string anchor;  // the identity or property being checked
    double estimate = 0.0;
    double std_error = 0.0;
    double tolerance = 0.0;
    Status status = Status::Pass;
    std::string detail;
};

/// A table written as CSV or JSON next to the report.
struct Artifact {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

struct AcceptanceReport {
    std::vector<TestRecord> records;
    std::vector<Artifact> artifacts;
    nlohmann::json fingerprint;

    bool pass() const;
    std::size_t count(Status s) const;
    nlohmann::json to_json() const;
    static AcceptanceReport from_json(const nlohmann::json& j);
};

/// Runs the enabled suites. Module errors are recorded per test and never
/// abort unrelated suites.
AcceptanceReport run(const ExperimentConfig& config);
/// Runs one suite (plus the divergence prerequisite for surface and perimeter).
AcceptanceReport run_suite(const ExperimentConfig& config, const std::string& suite);

/// Writes report-<tag>.json, config-<tag>.json (the resolved configuration)
/// and every artifact as <tag>-<name>.<format> under `dir`.
void write_outputs(const AcceptanceReport& report, const ExperimentConfig& config, const std::filesystem::path& dir,
                   const std::string& tag, const std::string& format);

/// Merges every report-*.json under `dir` in file-name order. Returns an
/// empty report when there is none.
AcceptanceReport aggregate_reports(const std::filesystem::path& dir, std::size_t* found = nullptr);

std::string format_number(double v);

}  // namespace surfmeas::harness

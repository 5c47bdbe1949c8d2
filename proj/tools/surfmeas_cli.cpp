#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "surfmeas/harness.hpp"
#include "surfmeas/parallel.hpp"
#include "surfmeas/sampler.hpp"

namespace fs = std::filesystem;
namespace hn = surfmeas::harness;
using nlohmann::json;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";
    std::optional<std::string> kind;
    std::optional<int> m;
    std::optional<std::size_t> n;
    std::optional<std::string> scheme;
    std::optional<std::size_t> count;
};

// Command-line overrides are applied to the JSON before validation so they
// are checked exactly like file entries.
hn::ExperimentConfig resolve(const Options& o) {
    json j = json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw hn::ConfigError({"cannot open configuration file " + o.config});
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw hn::ConfigError({o.config + ": " + e.what()});
        }
        if (!j.is_object()) throw hn::ConfigError({o.config + ": configuration must be a JSON object"});
    }
    if (o.seed) {
        j["batches"]["seed"] = *o.seed;
        j["sde"]["seed"] = *o.seed;
    }
    if (o.kind) j["level_function"]["kinds"] = json::array({*o.kind});
    if (o.m) j["measure"]["m"] = *o.m;
    if (o.n) j["measure"]["n"] = *o.n;
    if (o.scheme) j["sde"]["scheme"] = *o.scheme;
    if (o.count) j["batches"]["count"] = *o.count;
    return hn::parse_config(j);
}

fs::path output_dir(const Options& o, const hn::ExperimentConfig& c) {
    if (!o.out.empty()) return o.out;
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* env = std::getenv(hn::kOutputEnv); env && *env) return env;
    return "surfmeas-out";
}

void print_summary(const hn::AcceptanceReport& rep, std::ostream& out) {
    for (const auto& r : rep.records) {
        if (r.status == hn::Status::Pass) continue;
        out << hn::to_string(r.status) << "  " << r.id << "  estimate=" << hn::format_number(r.estimate)
            << " tolerance=" << hn::format_number(r.tolerance) << (r.detail.empty() ? "" : "  " + r.detail) << "\n";
    }
    out << rep.count(hn::Status::Pass) << " pass, " << rep.count(hn::Status::Fail) << " fail, "
        << rep.count(hn::Status::Blocked) << " blocked, " << rep.count(hn::Status::Error) << " error; verdict "
        << (rep.pass() ? "pass" : "fail") << "\n";
}

void print_report(const hn::AcceptanceReport& rep, const std::string& format) {
    if (format == "json") {
        json j = rep.to_json();
        json tables = json::object();
        for (const auto& a : rep.artifacts) tables[a.name] = a.to_json();
        j["tables"] = tables;
        std::cout << j.dump(2) << "\n";
        return;
    }
    for (const auto& a : rep.artifacts) std::cout << "# " << a.name << "\n" << a.to_csv();
    print_summary(rep, std::cout);
}

int run_suites(const Options& o, const std::string& tag, const std::optional<std::string>& suite) {
    const auto cfg = resolve(o);
    const auto rep = suite ? hn::run_suite(cfg, *suite) : hn::run(cfg);
    hn::write_outputs(rep, cfg, output_dir(o, cfg), tag, o.format);
    if (suite) print_report(rep, o.format);
    else print_summary(rep, std::cout);
    return rep.pass() ? 0 : kExitFail;
}

int sample(const Options& o) {
    const auto cfg = resolve(o);
    const auto law = cfg.measure.law();
    const auto batch = surfmeas::sample_product(law, cfg.batches.count, cfg.batches.seed);
    const fs::path dir = output_dir(o, cfg);
    fs::create_directories(dir);
    const fs::path file = dir / ("sample." + o.format);
    std::ofstream out(file, std::ios::binary);
    if (o.format == "csv") {
        surfmeas::write_batch_csv(batch, out);
    } else {
        json rows = json::array();
        for (std::size_t i = 0; i < batch.count; ++i) {
            const auto r = batch.row(i);
            rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        out << json{{"m", batch.m}, {"weights", batch.weights}, {"seed", batch.seed}, {"count", batch.count},
                    {"dim", batch.dim}, {"block_rows", batch.block_rows}, {"rows", rows}}
                   .dump()
            << "\n";
    }
    std::cout << "wrote " << batch.count << " draws of dimension " << batch.dim << " to " << file.string() << "\n";
    return 0;
}

int report(const Options& o) {
    fs::path dir = o.out;
    if (dir.empty()) {
        const char* env = std::getenv(hn::kOutputEnv);
        dir = env && *env ? fs::path(env) : fs::path("surfmeas-out");
    }
    std::size_t found = 0;
    const auto rep = hn::aggregate_reports(dir, &found);
    if (found == 0) {
        std::cout << "empty report: no runs found under " << dir.string() << "\n";
        return 0;
    }
    if (o.format == "json") std::cout << rep.to_json().dump(2) << "\n";
    else print_summary(rep, std::cout);
    return rep.pass() ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surface measures of product laws: experiment runner"};
    app.require_subcommand(1);
    unsigned workers = 1;
    app.add_option("--workers", workers, "worker threads (never changes results)")->check(CLI::PositiveNumber);

    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "seed for samples and trajectories");
        sub->add_option("--out", o.out, std::string("output directory (default $") + hn::kOutputEnv + " or surfmeas-out)");
        sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--workers", workers, "worker threads (never changes results)")->check(CLI::PositiveNumber);
    };
    auto measure_flags = [&](CLI::App* sub) {
        sub->add_option("--m", o.m, "exponent m of the product law");
        sub->add_option("--n", o.n, "dimension");
        sub->add_option("--count", o.count, "Monte Carlo sample count");
    };

    std::string chosen;
    auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        common(sub);
        sub->callback([&chosen, name] { chosen = name; });
        return sub;
    };
    auto* run = add("run", "run every enabled suite and write the acceptance report");
    measure_flags(run);
    run->add_option("--kind", o.kind, "sphere or hyperplane");
    run->add_option("--scheme", o.scheme, "tamed_explicit or exact_ou");
    measure_flags(add("sample", "draw a sample batch"));
    measure_flags(add("moments", "moment identities"));
    measure_flags(add("ibp", "whole-space integration by parts"));
    for (const char* s : {"divergence", "surface", "perimeter"}) {
        auto* sub = add(s, std::string(s) + " suite");
        measure_flags(sub);
        sub->add_option("--kind", o.kind, "sphere or hyperplane");
    }
    auto* sde = add("sde", "stochastic dynamics suite");
    measure_flags(sde);
    sde->add_option("--scheme", o.scheme, "tamed_explicit or exact_ou");
    add("fejer", "Fejer approximation suite");
    add("report", "aggregate the reports found in the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    surfmeas::set_worker_count(workers);

    try {
        if (chosen == "run") return run_suites(o, "run", std::nullopt);
        if (chosen == "sample") return sample(o);
        if (chosen == "report") return report(o);
        return run_suites(o, chosen, chosen);
    } catch (const hn::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
}

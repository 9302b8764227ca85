// ris_sense: single runs, Monte-Carlo sweeps, complexity tables and the
// built-in self-test for the RIS sensing estimator.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ris_sensing/config.hpp"
#include "ris_sensing/errors.hpp"
#include "ris_sensing/experiment.hpp"
#include "ris_sensing/selftest.hpp"
#include "ris_sensing/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::string output;
    bool verbose = false;
    bool table1 = false;
    unsigned jobs = 1;
    int max_iters = ris::AlsSettings{}.max_iters;
    double delta = ris::AlsSettings{}.delta;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_als)
{
    cmd->add_option("--config", o.config_path, "key = value scenario file");
    cmd->add_option("--set", o.overrides, "override one scenario key (key=value), repeatable");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("-o,--output", o.output, "output file");
    cmd->add_flag("-v,--verbose", o.verbose, "extra diagnostics on stderr");
    cmd->add_flag("--table1", o.table1, "start from the full-size parameter set instead of the small default");
    if (with_als) {
        cmd->add_option("--max-iters", o.max_iters, "ALS sweep limit per stage");
        cmd->add_option("--delta", o.delta, "ALS convergence threshold (relative to the input energy)");
    }
}

ris::ScenarioConfig build_config(const CommonOptions& o)
{
    ris::ScenarioConfig cfg = o.table1 ? ris::ScenarioConfig::table1() : ris::ScenarioConfig::desk();
    // parse every override first so a bad key fails before any file is read
    std::vector<std::pair<std::string, std::string>> sets;
    for (const auto& s : o.overrides) {
        sets.push_back(ris::parse_assignment(s));
        ris::ScenarioConfig scratch;
        ris::apply_setting(scratch, sets.back().first, sets.back().second);
    }
    if (!o.config_path.empty()) ris::load_config_file(cfg, o.config_path);
    for (const auto& [k, v] : sets) ris::apply_setting(cfg, k, v);
    cfg.validate();
    return cfg;
}

ris::AlsSettings build_als(const CommonOptions& o)
{
    ris::AlsSettings als;
    als.max_iters = o.max_iters;
    als.delta = o.delta;
    als.validate();
    return als;
}

std::string g17(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int cmd_simulate(const CommonOptions& o, double snr_db)
{
    const ris::ScenarioConfig cfg = build_config(o);
    ris::require_identifiable(cfg);
    const ris::AlsSettings als = build_als(o);

    const auto t0 = std::chrono::steady_clock::now();
    const ris::TrialOutcome out = ris::run_trial(cfg, als, snr_db, ris::TrialSeeds::derive(o.seed, 0, 0));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::cout << "dims L=" << cfg.L << " N_y=" << cfg.N_y << " N_z=" << cfg.N_z << " Q=" << cfg.Q << " M=" << cfg.M
              << " K=" << cfg.K << " codebook=" << ris::to_string(cfg.codebook) << "\n";
    std::cout << "snr_db " << g17(snr_db) << " (realized " << g17(out.realized_snr_db) << ")\n";
    for (const auto& w : out.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "stage1_iters " << out.stage1_iters << (out.stage1_converged ? " converged" : " not-converged")
              << "\n";
    std::cout << "stage2_iters " << out.stage2_iters << (out.stage2_converged ? " converged" : " not-converged")
              << "\n";
    if (o.verbose) std::cerr << "elapsed " << secs << " s\n";

    if (out.failed()) {
        std::cout << "trial failed: " << out.failure << "\n";
        return kExitRuntime;
    }
    const ris::SensingEstimate& est = *out.estimate;
    std::cout << "parameter truth estimate rel_error\n";
    for (std::size_t i = 0; i < ris::kAllParameters.size(); ++i) {
        const ris::Parameter p = ris::kAllParameters[i];
        const auto v = est.value(p);
        std::cout << ris::to_string(p) << " " << g17(ris::true_value(out.truth, p)) << " "
                  << (v ? g17(*v) : std::string("unidentifiable")) << " "
                  << g17(std::sqrt((*est.relative_sq_error)[i])) << "\n";
    }
    if (est.angle_mapping_defined) {
        std::cout << "theta_D " << g17(*est.theta_D) << "\nphi_D " << g17(*est.phi_D) << "\n";
    } else {
        std::cout << "angle mapping undefined\n";
    }

    if (!o.output.empty()) {
        nlohmann::ordered_json j;
        for (const auto& [k, v] : ris::config_entries(cfg)) j["config"][k] = v;
        j["seed"] = o.seed;
        j["snr_db"] = snr_db;
        j["truth"] = {{"tau", out.truth.tau}, {"nu", out.truth.nu}, {"mu_D", out.truth.mu_D},
                      {"psi_D", out.truth.psi_D}};
        for (std::size_t i = 0; i < ris::kAllParameters.size(); ++i) {
            const ris::Parameter p = ris::kAllParameters[i];
            const auto v = est.value(p);
            j["estimate"][ris::to_string(p)] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
            j["relative_error"][ris::to_string(p)] = std::sqrt((*est.relative_sq_error)[i]);
        }
        j["stage1_iters"] = out.stage1_iters;
        j["stage2_iters"] = out.stage2_iters;
        std::ofstream f(o.output, std::ios::binary | std::ios::trunc);
        if (!f) throw ris::IoError("cannot open '" + o.output + "' for writing");
        f << j.dump(2) << "\n";
        if (!f) throw ris::IoError("failed writing '" + o.output + "'");
    }
    return kExitOk;
}

std::vector<ris::Index> parse_values(const std::string& text)
{
    std::vector<ris::Index> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size()) throw ris::UsageError("");
            out.push_back(static_cast<ris::Index>(v));
        } catch (const std::exception&) {
            throw ris::UsageError("cannot parse value list '" + text + "'");
        }
    }
    return out;
}

std::string manifest_path_for(const std::string& csv)
{
    std::filesystem::path p(csv);
    p.replace_extension(".manifest.json");
    return p.string();
}

struct SweepOptions {
    std::string var = "none";
    std::string values;
    std::string snr = "-10:5:30";
    int trials = 200;
    std::string n_mode = "pinned-k";
};

int cmd_sweep(const CommonOptions& o, const SweepOptions& s)
{
    ris::ExperimentSpec spec;
    spec.base = build_config(o);
    spec.sweep_variable = ris::parse_sweep_variable(s.var);
    if (spec.sweep_variable != ris::SweepVariable::None) {
        if (s.values.empty()) throw ris::UsageError("--values is required with --var " + s.var);
        spec.sweep_values = parse_values(s.values);
    }
    spec.snr_grid_db = ris::parse_range(s.snr);
    spec.trials = s.trials;
    spec.master_seed = o.seed;
    spec.als = build_als(o);
    spec.n_mode = ris::parse_n_sweep_mode(s.n_mode);
    spec.validate();

    const std::string csv = o.output.empty() ? "results.csv" : o.output;
    const auto t0 = std::chrono::steady_clock::now();
    const auto records = ris::run_sweep(spec, o.jobs);
    ris::write_results(records, csv);
    ris::write_manifest(spec, o.overrides, manifest_path_for(csv));
    if (o.verbose) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cerr << records.size() << " records, " << secs << " s\n";
    }
    std::cout << "wrote " << csv << " (" << records.size() << " rows) and " << manifest_path_for(csv) << "\n";
    return kExitOk;
}

int cmd_complexity(const CommonOptions& o, const std::string& grid, int iters1, int iters2)
{
    const ris::ScenarioConfig cfg = build_config(o);
    const auto [key, list] = ris::parse_assignment(grid);
    const std::vector<ris::Index> values = parse_values(list);
    if (iters1 < 1 || iters2 < 1) throw ris::PreconditionError("iteration counts must be >= 1");

    std::ostringstream out;
    out << "L,N,Q,M,K,iters1,iters2,stage1_ops,stage2_ops\n";
    for (ris::Index v : values) {
        if (v < 1) throw ris::PreconditionError("grid values must be positive");
        ris::ComplexityDims d;
        d.L = static_cast<double>(cfg.L);
        d.N = static_cast<double>(cfg.N());
        d.Q = static_cast<double>(cfg.Q);
        d.M = static_cast<double>(cfg.M);
        d.K = static_cast<double>(cfg.K);
        const double x = static_cast<double>(v);
        if (key == "N") {
            d.N = x;
            d.K = x * x;
        } else if (key == "L") {
            d.L = x;
        } else if (key == "Q") {
            d.Q = x;
        } else if (key == "M") {
            d.M = x;
        } else if (key == "K") {
            d.K = x;
        } else {
            throw ris::UsageError("--grid key must be one of L, N, Q, M, K");
        }
        const ris::ComplexityReport r = ris::complexity_estimate(d, iters1, iters2);
        char line[256];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g\n", d.L, d.N, d.Q, d.M,
                      d.K, iters1, iters2, r.stage1_ops, r.stage2_ops);
        out << line;
    }
    if (o.output.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream f(o.output, std::ios::binary | std::ios::trunc);
        if (!f) throw ris::IoError("cannot open '" + o.output + "' for writing");
        f << out.str();
        if (!f) throw ris::IoError("failed writing '" + o.output + "'");
    }
    return kExitOk;
}

int cmd_selftest(const std::string& fault)
{
    const auto results = ris::run_selftest(ris::parse_selftest_fault(fault));
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitRuntime;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"RIS-assisted monostatic sensing: simulation, sweeps and complexity"};
    app.set_version_flag("--version", ris::kVersion);
    app.require_subcommand(1);

    CommonOptions common;

    auto* sim = app.add_subcommand("simulate", "run one seeded trial and print truth vs estimate");
    add_common(sim, common, true);
    double snr_db = 20.0;
    sim->add_option("--snr-db", snr_db, "signal-to-noise ratio [dB]");

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo RMSE sweep, CSV + JSON manifest");
    add_common(sweep, common, true);
    SweepOptions sopt;
    sweep->add_option("--var", sopt.var, "swept variable: none, Q, K or N");
    sweep->add_option("--values", sopt.values, "comma-separated sweep values");
    sweep->add_option("--snr", sopt.snr, "SNR grid a:step:b [dB]");
    sweep->add_option("--trials", sopt.trials, "trials per cell");
    sweep->add_option("--n-mode", sopt.n_mode, "N sweep: pinned-k (K = max N^2) or k-tracks-n (K = N^2)");
    sweep->add_option("--jobs", common.jobs, "worker threads (0 = all cores)");

    auto* cx = app.add_subcommand("complexity", "closed-form operation counts over a dimension grid");
    add_common(cx, common, false);
    std::string grid = "N=4,8,16";
    int iters1 = 10, iters2 = 10;
    cx->add_option("--grid", grid, "KEY=v1,v2,... with KEY one of L, N, Q, M, K (N also sets K = N^2)");
    cx->add_option("--iters1", iters1, "stage-1 iterations");
    cx->add_option("--iters2", iters2, "stage-2 iterations");

    auto* st = app.add_subcommand("selftest", "run the built-in invariant checks");
    std::string fault = "none";
    st->add_option("--inject-fault", fault, "deliberately break a kernel (unfold)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(common, snr_db);
        if (sweep->parsed()) return cmd_sweep(common, sopt);
        if (cx->parsed()) return cmd_complexity(common, grid, iters1, iters2);
        if (st->parsed()) return cmd_selftest(fault);
    } catch (const ris::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ris::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ris::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

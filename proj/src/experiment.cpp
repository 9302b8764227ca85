#include "ris_sensing/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <json.hpp>

#include "ris_sensing/config.hpp"
#include "ris_sensing/errors.hpp"
#include "ris_sensing/version.hpp"

namespace ris {

namespace {

std::string format_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Index integer_sqrt(Index n)
{
    Index r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : -1;
}

constexpr const char* kCsvHeader = "sweep_var,sweep_value,snr_db,parameter,rmse,trials_used,stage1_iters,stage2_iters";

} // namespace

std::string to_string(SweepVariable v)
{
    switch (v) {
    case SweepVariable::None: return "none";
    case SweepVariable::Q: return "Q";
    case SweepVariable::K: return "K";
    case SweepVariable::N: return "N";
    }
    return "?";
}

SweepVariable parse_sweep_variable(const std::string& text)
{
    for (SweepVariable v : {SweepVariable::None, SweepVariable::Q, SweepVariable::K, SweepVariable::N}) {
        if (to_string(v) == text) return v;
    }
    throw UsageError("unknown sweep variable '" + text + "' (expected none, Q, K or N)");
}

std::string to_string(NSweepMode m)
{
    return m == NSweepMode::PinnedK ? "pinned-k" : "k-tracks-n";
}

NSweepMode parse_n_sweep_mode(const std::string& text)
{
    if (text == "pinned-k") return NSweepMode::PinnedK;
    if (text == "k-tracks-n") return NSweepMode::KTracksN;
    throw UsageError("unknown N sweep mode '" + text + "' (expected pinned-k or k-tracks-n)");
}

std::vector<double> parse_range(const std::string& text)
{
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw UsageError("");
        } catch (const std::exception&) {
            throw UsageError("cannot parse range '" + text + "' (expected a:step:b or a single value)");
        }
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0]) {
        throw UsageError("bad range '" + text + "' (expected a:step:b with step > 0 and b >= a)");
    }
    std::vector<double> out;
    const double a = parts[0], step = parts[1], b = parts[2];
    const auto count = static_cast<long long>(std::floor((b - a) / step + 1e-9));
    for (long long i = 0; i <= count; ++i) {
        out.push_back(a + static_cast<double>(i) * step);
    }
    return out;
}

void ExperimentSpec::validate() const
{
    if (trials < 1) throw PreconditionError("trials must be >= 1");
    if (snr_grid_db.empty()) throw PreconditionError("SNR grid is empty");
    for (double s : snr_grid_db) {
        if (!std::isfinite(s)) throw PreconditionError("SNR values must be finite");
    }
    als.validate();
    if (sweep_variable != SweepVariable::None) {
        if (sweep_values.empty()) throw PreconditionError("sweep values are empty");
        for (Index v : sweep_values) {
            if (v < 1) throw PreconditionError("sweep values must be positive");
            if (sweep_variable == SweepVariable::N && integer_sqrt(v) < 0) {
                throw UsageError("N sweep values must be perfect squares (N_y = N_z = sqrt(N)), got "
                                 + std::to_string(v));
            }
        }
    }
    for (std::size_t i = 0; i < points(); ++i) {
        const ScenarioConfig cfg = config_for(i);
        cfg.validate();
        require_identifiable(cfg);
    }
}

std::size_t ExperimentSpec::points() const
{
    return sweep_variable == SweepVariable::None ? 1 : sweep_values.size();
}

double ExperimentSpec::point_value(std::size_t i) const
{
    return sweep_variable == SweepVariable::None ? 0.0 : static_cast<double>(sweep_values.at(i));
}

ScenarioConfig ExperimentSpec::config_for(std::size_t i) const
{
    ScenarioConfig cfg = base;
    switch (sweep_variable) {
    case SweepVariable::None: break;
    case SweepVariable::Q: cfg.Q = sweep_values.at(i); break;
    case SweepVariable::K: cfg.K = sweep_values.at(i); break;
    case SweepVariable::N: {
        const Index side = integer_sqrt(sweep_values.at(i));
        cfg.N_y = side;
        cfg.N_z = side;
        if (n_mode == NSweepMode::KTracksN) {
            cfg.K = sweep_values.at(i) * sweep_values.at(i);
        } else {
            const Index nmax = *std::max_element(sweep_values.begin(), sweep_values.end());
            cfg.K = nmax * nmax;
        }
        break;
    }
    }
    return cfg;
}

TrialSeeds TrialSeeds::derive(std::uint64_t master, std::size_t point, std::size_t trial)
{
    TrialSeeds s;
    s.target = derive_seed({master, 1, trial});
    s.scenario = derive_seed({master, 2, trial});
    s.noise = derive_seed({master, 3, point, trial});
    s.als = derive_seed({master, 4, point, trial});
    return s;
}

TrialOutcome run_trial(const ScenarioConfig& cfg, const AlsSettings& als, double snr_db, const TrialSeeds& seeds)
{
    cfg.validate();
    require_identifiable(cfg);

    TrialOutcome out;
    Rng target_rng(seeds.target);
    out.truth = draw_target(cfg, target_rng);

    Rng scenario_rng(seeds.scenario);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    const cplx alpha = std::polar(path_gain_magnitude(cfg), phase(scenario_rng));
    const ComplexTensor3 pilots = generate_pilots(cfg, derive_seed({seeds.scenario, 1}));
    const RisCodebook codebook = build_codebook(cfg);

    const ComplexTensor3 Y = generate_echo_tensor(cfg, out.truth, codebook, pilots, alpha, &out.warnings);
    const EchoData echo = add_noise_at_snr(Y, snr_db, seeds.noise);
    out.realized_snr_db = 10.0 * std::log10(echo.realized_snr);

    AlsSettings settings = als;
    settings.seed = seeds.als;
    try {
        const Stage1Estimate s1 = als_stage1(echo.Y_noisy, codebook, settings);
        out.stage1_iters = s1.iterations;
        out.stage1_converged = s1.converged;
        const Stage2Estimate s2 = als_stage2(tensorize_F(s1.F_hat, cfg.M, cfg.Q), pilots, settings, s1.H_hat);
        out.stage2_iters = s2.iterations;
        out.stage2_converged = s2.converged;
        const ComplexVector b = upa_steering(out.truth.mu_A, out.truth.psi_A, cfg.N_y, cfg.N_z);
        const ComplexVector core = normalize_core(s1, codebook, b, settings.pinv_tol);
        SensingEstimate est = extract_parameters(s2.d_hat, s2.c_hat, core, cfg);
        est.attach_truth(out.truth);
        out.estimate = est;
    } catch (const NumericalDivergenceError& e) {
        out.failure = e.what();
    } catch (const DegenerateInputError& e) {
        out.failure = e.what();
    }
    return out;
}

std::vector<RmseRecord> aggregate_cell(const std::vector<TrialOutcome>& trials, SweepVariable var, double value,
                                       double snr_db)
{
    std::array<double, 4> sum{};
    double it1 = 0.0, it2 = 0.0;
    int used = 0;
    for (const TrialOutcome& t : trials) {
        if (t.failed()) continue;
        ++used;
        it1 += t.stage1_iters;
        it2 += t.stage2_iters;
        const auto& err = *t.estimate->relative_sq_error;
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += err[i];
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<RmseRecord> out;
    for (std::size_t i = 0; i < kAllParameters.size(); ++i) {
        RmseRecord r;
        r.sweep_variable = var;
        r.sweep_value = value;
        r.snr_db = snr_db;
        r.parameter = kAllParameters[i];
        r.trials_used = used;
        r.rmse = used > 0 ? std::sqrt(sum[i] / used) : nan;
        r.stage1_iters = used > 0 ? it1 / used : nan;
        r.stage2_iters = used > 0 ? it2 / used : nan;
        out.push_back(r);
    }
    return out;
}

std::vector<RmseRecord> run_sweep(const ExperimentSpec& spec, unsigned jobs)
{
    spec.validate();
    const std::size_t P = spec.points();
    const std::size_t S = spec.snr_grid_db.size();
    const std::size_t V = static_cast<std::size_t>(spec.trials);

    std::vector<ScenarioConfig> configs;
    for (std::size_t p = 0; p < P; ++p) configs.push_back(spec.config_for(p));

    // Slot (p, s, v) is written only by the worker that ran it.
    std::vector<TrialOutcome> outcomes(P * S * V);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= outcomes.size()) return;
            const std::size_t v = idx % V;
            const std::size_t s = (idx / V) % S;
            const std::size_t p = idx / (V * S);
            try {
                outcomes[idx] = run_trial(configs[p], spec.als, spec.snr_grid_db[s],
                                          TrialSeeds::derive(spec.master_seed, p, v));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(outcomes.size());
                return;
            }
        }
    };

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, outcomes.size()));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    std::vector<RmseRecord> records;
    for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t s = 0; s < S; ++s) {
            const auto first = outcomes.begin() + static_cast<std::ptrdiff_t>((p * S + s) * V);
            const std::vector<TrialOutcome> cell(first, first + static_cast<std::ptrdiff_t>(V));
            auto rec = aggregate_cell(cell, spec.sweep_variable, spec.point_value(p), spec.snr_grid_db[s]);
            records.insert(records.end(), rec.begin(), rec.end());
        }
    }
    return records;
}

ComplexityReport complexity_estimate(const ComplexityDims& d, int iters1, int iters2)
{
    ComplexityReport r;
    r.dims = d;
    r.iters1 = iters1;
    r.iters2 = iters2;
    const double MQ = d.M * d.Q;
    const double N2 = d.N * d.N;
    r.stage1_ops = iters1 * (N2 * d.K * (MQ * (1.0 + d.L * N2) + d.L));
    r.stage2_ops = iters2 * (d.N * (MQ * (d.M * d.M + d.Q * d.Q) + d.L * d.L));
    return r;
}

ComplexityReport complexity_estimate(const ScenarioConfig& cfg, int iters1, int iters2)
{
    ComplexityDims d;
    d.L = static_cast<double>(cfg.L);
    d.N = static_cast<double>(cfg.N());
    d.Q = static_cast<double>(cfg.Q);
    d.M = static_cast<double>(cfg.M);
    d.K = static_cast<double>(cfg.K);
    return complexity_estimate(d, iters1, iters2);
}

std::string format_results(const std::vector<RmseRecord>& records)
{
    std::string out = kCsvHeader;
    out += '\n';
    for (const RmseRecord& r : records) {
        out += to_string(r.sweep_variable) + ',' + format_real(r.sweep_value) + ',' + format_real(r.snr_db) + ','
               + to_string(r.parameter) + ',' + format_real(r.rmse) + ',' + std::to_string(r.trials_used) + ','
               + format_real(r.stage1_iters) + ',' + format_real(r.stage2_iters) + '\n';
    }
    return out;
}

void write_results(const std::vector<RmseRecord>& records, const std::string& path)
{
    if (records.empty()) {
        throw PreconditionError("write_results: no records");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << format_results(records);
    out.close();
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

std::vector<RmseRecord> read_results(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw IoError("'" + path + "': missing or unexpected CSV header");
    }
    std::vector<RmseRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (f.size() != 8) {
            throw IoError("'" + path + "':" + std::to_string(lineno) + ": expected 8 fields");
        }
        try {
            RmseRecord r;
            r.sweep_variable = parse_sweep_variable(f[0]);
            r.sweep_value = std::stod(f[1]);
            r.snr_db = std::stod(f[2]);
            r.parameter = parse_parameter(f[3]);
            r.rmse = std::stod(f[4]);
            r.trials_used = std::stoi(f[5]);
            r.stage1_iters = std::stod(f[6]);
            r.stage2_iters = std::stod(f[7]);
            records.push_back(r);
        } catch (const std::exception& e) {
            throw IoError("'" + path + "':" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

std::string manifest_json(const ExperimentSpec& spec, const std::vector<std::string>& overrides)
{
    nlohmann::ordered_json j;
    j["tool"] = "ris_sense";
    j["version"] = kVersion;
    j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "."
                         + std::to_string(EIGEN_MINOR_VERSION);
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : config_entries(spec.base)) cfg[k] = v;
    j["config"] = cfg;
    j["overrides"] = overrides;
    j["sweep_var"] = to_string(spec.sweep_variable);
    j["sweep_values"] = spec.sweep_values;
    j["n_mode"] = to_string(spec.n_mode);
    j["snr_db"] = spec.snr_grid_db;
    j["trials"] = spec.trials;
    j["master_seed"] = spec.master_seed;
    j["als"] = {{"max_iters", spec.als.max_iters}, {"delta", spec.als.delta}, {"pinv_tol", spec.als.pinv_tol}};
    j["seed_scheme"] = "derive_seed(master, stream, [point,] trial) with splitmix64 mixing; "
                       "target=stream 1, scenario=stream 2, noise=stream 3, als=stream 4";
    return j.dump(2) + "\n";
}

void write_manifest(const ExperimentSpec& spec, const std::vector<std::string>& overrides, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << manifest_json(spec, overrides);
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

} // namespace ris

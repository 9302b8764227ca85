#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ris_sensing/esprit.hpp"
#include "ris_sensing/estimation.hpp"
#include "ris_sensing/signal_model.hpp"

namespace ris {

enum class SweepVariable { None, Q, K, N };

std::string to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& text);

/// How K follows N in an N sweep.
enum class NSweepMode {
    PinnedK,    ///< K = max(N)^2 for every point
    KTracksN,   ///< K = N^2 at each point
};

std::string to_string(NSweepMode m);
NSweepMode parse_n_sweep_mode(const std::string& text);

/// SNR grid a:step:b inclusive, e.g. "-10:5:30".
std::vector<double> parse_range(const std::string& text);

struct ExperimentSpec {
    ScenarioConfig base = ScenarioConfig::desk();
    SweepVariable sweep_variable = SweepVariable::None;
    /// Q, K or N values (N must be a perfect square; N_y = N_z = sqrt(N)).
    /// Ignored for SweepVariable::None.
    std::vector<Index> sweep_values;
    std::vector<double> snr_grid_db = {-10, -5, 0, 5, 10, 15, 20, 25, 30};
    int trials = 200;
    std::uint64_t master_seed = 0;
    AlsSettings als;
    NSweepMode n_mode = NSweepMode::PinnedK;

    /// Throws PreconditionError (counts, empty grids, identifiability of
    /// every swept configuration) or UsageError (malformed N values).
    void validate() const;

    /// Number of sweep points (1 for SweepVariable::None).
    std::size_t points() const;
    /// Reported sweep value of point i (0 for SweepVariable::None).
    double point_value(std::size_t i) const;
    ScenarioConfig config_for(std::size_t i) const;
};

/// Seeds of one trial. The target draw is shared by every cell with the same
/// trial index and the noise realization by every SNR of a sweep point, so
/// cells differ only in what the sweep changes.
struct TrialSeeds {
    std::uint64_t target = 0;
    std::uint64_t scenario = 0;  ///< path-gain phase and pilots
    std::uint64_t noise = 0;
    std::uint64_t als = 0;

    static TrialSeeds derive(std::uint64_t master, std::size_t point, std::size_t trial);
};

struct TrialOutcome {
    TargetParameters truth;
    std::optional<SensingEstimate> estimate;  ///< empty for a failed trial
    std::string failure;                      ///< reason when failed
    int stage1_iters = 0;
    int stage2_iters = 0;
    bool stage1_converged = false;
    bool stage2_converged = false;
    double realized_snr_db = 0.0;
    std::vector<std::string> warnings;

    bool failed() const { return !estimate.has_value(); }
};

/// One end-to-end run: draw, synthesize, add noise, two ALS stages, ESPRIT.
/// Numerical divergence (and degenerate intermediate results) yield a failed
/// outcome instead of an exception.
TrialOutcome run_trial(const ScenarioConfig& cfg, const AlsSettings& als, double snr_db, const TrialSeeds& seeds);

struct RmseRecord {
    SweepVariable sweep_variable = SweepVariable::None;
    double sweep_value = 0.0;
    double snr_db = 0.0;
    Parameter parameter = Parameter::Tau;
    double rmse = 0.0;          ///< NaN when no trial of the cell succeeded
    int trials_used = 0;
    double stage1_iters = 0.0;  ///< mean over successful trials
    double stage2_iters = 0.0;

    bool operator==(const RmseRecord&) const = default;
};

/// All cells of the sweep, ordered by (sweep point, SNR, parameter).
/// `jobs` worker threads (0 = hardware concurrency); the result does not
/// depend on it.
std::vector<RmseRecord> run_sweep(const ExperimentSpec& spec, unsigned jobs = 1);

/// Per-trial squared relative errors aggregated into one RMSE per parameter.
std::vector<RmseRecord> aggregate_cell(const std::vector<TrialOutcome>& trials, SweepVariable var, double value,
                                       double snr_db);

struct ComplexityDims {
    double L = 1, N = 1, Q = 1, M = 1, K = 1;
};

struct ComplexityReport {
    ComplexityDims dims;
    int iters1 = 1;
    int iters2 = 1;
    double stage1_ops = 0.0;
    double stage2_ops = 0.0;
    std::optional<double> wall_time_s;
};

/// stage 1: iters1 * N^2 K [MQ (1 + L N^2) + L]
/// stage 2: iters2 * N [MQ (M^2 + Q^2) + L^2]
ComplexityReport complexity_estimate(const ComplexityDims& dims, int iters1, int iters2);
ComplexityReport complexity_estimate(const ScenarioConfig& cfg, int iters1, int iters2);

/// Throws PreconditionError for an empty list, IoError when the file cannot be written.
void write_results(const std::vector<RmseRecord>& records, const std::string& path);
std::string format_results(const std::vector<RmseRecord>& records);
std::vector<RmseRecord> read_results(const std::string& path);

/// JSON run manifest: full config, sweep definition, seeds, overrides and
/// library versions.
std::string manifest_json(const ExperimentSpec& spec, const std::vector<std::string>& overrides);
void write_manifest(const ExperimentSpec& spec, const std::vector<std::string>& overrides, const std::string& path);

} // namespace ris

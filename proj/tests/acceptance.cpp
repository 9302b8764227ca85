// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit code 1
// if any fails. Criteria 6-8 run full 200-trial sweeps and take minutes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ris_sensing/errors.hpp"
#include "ris_sensing/esprit.hpp"
#include "ris_sensing/estimation.hpp"
#include "ris_sensing/experiment.hpp"

using namespace ris;
using oracle::rel_err;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double wrap_diff(double a, double b) { return std::abs(std::arg(std::polar(1.0, a - b))); }

std::vector<RmseRecord> sweep(SweepVariable var, std::vector<Index> values, std::vector<double> snr, std::uint64_t seed)
{
    ExperimentSpec spec;
    spec.sweep_variable = var;
    spec.sweep_values = std::move(values);
    spec.snr_grid_db = std::move(snr);
    spec.trials = 200;
    spec.master_seed = seed;
    return run_sweep(spec, 0);
}

double rmse_of(const std::vector<RmseRecord>& r, double value, double snr, Parameter p)
{
    for (const RmseRecord& x : r)
        if (x.sweep_value == value && x.snr_db == snr && x.parameter == p) return x.rmse;
    return std::nan("");
}

Verdict noiseless_recovery()
{
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioConfig cfg = ScenarioConfig::desk();
    const TrialOutcome t = run_trial(cfg, AlsSettings{}, 300.0, TrialSeeds::derive(11, 0, 0));
    const double secs = seconds_since(t0);
    if (t.failed()) return {false, "trial failed: " + t.failure};
    double worst = 0.0;
    for (double e : *t.estimate->relative_sq_error) worst = std::max(worst, std::sqrt(e));
    return {worst < 1e-6 && secs < 10.0, "tau=" + fmt(t.truth.tau) + " s, max rel error " + fmt(worst) + ", "
                                            + fmt(secs) + " s"};
}

Verdict als_monotone()
{
    const ScenarioConfig cfg = ScenarioConfig::desk();
    int violations = 0;
    double worst = 0.0;
    for (std::uint64_t run = 0; run < 50; ++run) {
        const TrialSeeds seeds = TrialSeeds::derive(22, 0, run);
        Rng rng(seeds.target);
        const TargetParameters target = draw_target(cfg, rng);
        const RisCodebook cb = build_codebook(cfg);
        const ComplexTensor3 X = generate_pilots(cfg, seeds.scenario);
        const ComplexTensor3 Y = generate_echo_tensor(cfg, target, cb, X, std::polar(1.0, 0.3));
        const ComplexTensor3 Yn = add_noise_at_snr(Y, 10.0, seeds.noise).Y_noisy;
        AlsSettings als;
        als.seed = seeds.als;
        const Stage1Estimate s1 = als_stage1(Yn, cb, als);
        const ComplexTensor3 Ft = tensorize_F(s1.F_hat, cfg.M, cfg.Q);
        const Stage2Estimate s2 = als_stage2(Ft, X, als, s1.H_hat);
        auto check = [&](const std::vector<double>& h, double scale) {
            for (std::size_t i = 1; i < h.size(); ++i) {
                const double rise = (h[i] - h[i - 1]) / scale;
                worst = std::max(worst, rise);
                if (rise > 1e-12) ++violations;
            }
        };
        check(s1.error_history, Yn.squared_norm());
        check(s2.error_history, Ft.squared_norm());
    }
    return {violations == 0, "100 histories, " + std::to_string(violations) + " increases, largest relative step "
                                 + fmt(worst)};
}

Verdict tensor_identities()
{
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(33);
    std::uniform_int_distribution<Index> dim(1, 6);
    double worst = 0.0;
    auto track = [&](double e) { worst = std::max(worst, e); };
    for (int t = 0; t < 100; ++t) {
        const Index I1 = dim(rng), I2 = dim(rng), I3 = dim(rng);
        const ComplexTensor3 T = oracle::random_tensor(I1, I2, I3, rng);
        for (int mode = 1; mode <= 3; ++mode) {
            track(rel_err(fold(unfold(T, mode), mode, T.dims()), T));
            track(rel_err(unfold(T, mode), oracle::unfold(T, mode)));
        }

        const Index J1 = dim(rng), J2 = dim(rng), J3 = dim(rng);
        const ComplexMatrix A = random_complex_matrix(J1, I1, rng);
        const ComplexMatrix B = random_complex_matrix(J2, I2, rng);
        const ComplexMatrix C = random_complex_matrix(J3, I3, rng);
        const ComplexTensor3 Y = mode_product(mode_product(mode_product(T, A, 1), B, 2), C, 3);
        track(rel_err(unfold(Y, 1), A * oracle::unfold(T, 1) * oracle::kron(C, B).transpose()));
        track(rel_err(unfold(Y, 2), B * oracle::unfold(T, 2) * oracle::kron(C, A).transpose()));
        track(rel_err(unfold(Y, 3), C * oracle::unfold(T, 3) * oracle::kron(B, A).transpose()));

        const ComplexMatrix P = random_complex_matrix(I1, I2, rng);
        const ComplexMatrix R = random_complex_matrix(I2, I3, rng);
        track(rel_err(vec(A * P * R), oracle::kron(R.transpose(), A) * vec(P)));
        const ComplexVector b = oracle::random_vector(I2, rng);
        const ComplexMatrix S = random_complex_matrix(I2, I3, rng);
        track(rel_err(vec(P * b.asDiagonal() * S), oracle::kr(S.transpose(), P) * b));
        const ComplexMatrix a = random_complex_matrix(1, I2, rng);
        track(rel_err(khatri_rao(a, P), P * a.transpose().asDiagonal()));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-12 && secs < 5.0, "max relative deviation " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Verdict echo_oracle()
{
    ScenarioConfig cfg;
    cfg.L = 2;
    cfg.N_y = 2;
    cfg.N_z = 2;
    cfg.Q = 3;
    cfg.M = 3;
    cfg.K = 16;
    Rng rng(44);
    const TargetParameters t = draw_target(cfg, rng);
    const RisCodebook cb = build_codebook(cfg);
    const ComplexTensor3 X = generate_pilots(cfg, 45);
    const cplx alpha = std::polar(0.8, -1.1);
    const double e = rel_err(generate_echo_tensor(cfg, t, cb, X, alpha), oracle::echo(cfg, t, cb.W, X, alpha));
    return {e < 1e-12, "relative deviation " + fmt(e)};
}

Verdict esprit_exact()
{
    double worst1 = 0.0, worst2 = 0.0;
    for (Index P : {4, 8, 16, 64})
        for (int i = 0; i < 64; ++i) {
            const double w = -kPi + (i + 0.5) * 2.0 * kPi / 64.0;
            worst1 = std::max(worst1, wrap_diff(-esprit_1d(oracle::expo(w, P)), w));
        }
    Rng rng(55);
    std::uniform_real_distribution<double> f(-3.0, 3.0);
    for (int t = 0; t < 50; ++t) {
        const double mu = f(rng), psi = f(rng);
        const ComplexVector p = upa_steering(mu, psi, 4, 4);
        const SpatialFrequencies sf = esprit_2d(oracle::kron(p, p), 4, 4);
        worst2 = std::max({worst2, wrap_diff(*sf.mu, mu), wrap_diff(*sf.psi, psi)});
    }
    return {worst1 < 1e-10 && worst2 < 1e-10, "1-D max error " + fmt(worst1) + ", 2-D max error " + fmt(worst2)};
}

Verdict q_trend()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = sweep(SweepVariable::Q, {8, 16, 32}, {20.0}, 66);
    const double a = rmse_of(r, 8, 20, Parameter::Tau), b = rmse_of(r, 16, 20, Parameter::Tau),
                 c = rmse_of(r, 32, 20, Parameter::Tau);
    const double secs = seconds_since(t0);
    std::string detail = "tau RMSE Q=8 " + fmt(a) + ", Q=16 " + fmt(b) + ", Q=32 " + fmt(c);
    for (Parameter p : {Parameter::Nu, Parameter::MuD, Parameter::PsiD})
        detail += "; " + to_string(p) + " " + fmt(rmse_of(r, 8, 20, p)) + " -> " + fmt(rmse_of(r, 32, 20, p));
    return {a > b && b > c && secs < 600.0, detail + ", " + fmt(secs) + " s"};
}

Verdict k_trend()
{
    const auto r = sweep(SweepVariable::K, {16, 64}, {20.0}, 77);
    bool ok = true;
    std::string detail;
    for (Parameter p : kAllParameters) {
        const double lo = rmse_of(r, 16, 20, p), hi = rmse_of(r, 64, 20, p);
        ok = ok && hi < lo;
        detail += (detail.empty() ? "" : "; ") + to_string(p) + " " + fmt(lo) + " -> " + fmt(hi);
    }
    return {ok, "K=16 -> K=64: " + detail};
}

Verdict snr_trend()
{
    const auto r = sweep(SweepVariable::None, {}, {0.0, 30.0}, 88);
    bool ok = true;
    std::string detail;
    for (Parameter p : kAllParameters) {
        const double lo = rmse_of(r, 0, 0, p), hi = rmse_of(r, 0, 30, p);
        ok = ok && hi < lo;
        detail += (detail.empty() ? "" : "; ") + to_string(p) + " " + fmt(lo) + " -> " + fmt(hi);
    }
    return {ok, "0 dB -> 30 dB: " + detail};
}

Verdict guards()
{
    auto rejected = [](const ScenarioConfig& cfg) {
        const RisCodebook cb = build_codebook(cfg);
        Rng rng(1);
        const TargetParameters t = draw_target(cfg, rng);
        const ComplexTensor3 Y = generate_echo_tensor(cfg, t, cb, generate_pilots(cfg, 2), 1.0);
        AlsSettings als;
        als.max_iters = 1;
        bool stage1 = false, trial = false;
        try {
            als_stage1(Y, cb, als);
        } catch (const PreconditionError&) {
            stage1 = true;
        }
        try {
            run_trial(cfg, als, 10.0, TrialSeeds{});
        } catch (const PreconditionError&) {
            trial = true;
        }
        return stage1 && trial;
    };
    ScenarioConfig k = ScenarioConfig::desk();
    k.K = k.N() * k.N() - 1;
    ScenarioConfig mq = ScenarioConfig::desk();
    mq.M = 2;
    mq.Q = 2;
    mq.L = 5;
    const bool a = rejected(k), b = rejected(mq);
    return {a && b, std::string("K = N^2 - 1 ") + (a ? "rejected" : "accepted") + ", MQ = L - 1 "
                        + (b ? "rejected" : "accepted")};
}

Verdict complexity()
{
    bool exact = true, monotone = true;
    double prev = 0.0;
    std::string detail;
    for (double N : {4.0, 8.0, 16.0}) {
        const ComplexityDims d{4, N, 16, 64, N * N};
        const ComplexityReport r = complexity_estimate(d, 10, 10);
        const double s1 = 10.0 * N * N * d.K * (d.M * d.Q * (1.0 + d.L * N * N) + d.L);
        const double s2 = 10.0 * N * (d.M * d.Q * (d.M * d.M + d.Q * d.Q) + d.L * d.L);
        exact = exact && r.stage1_ops == s1 && r.stage2_ops == s2;
        const double total = r.stage1_ops + r.stage2_ops;
        monotone = monotone && total > prev;
        prev = total;
        detail += (detail.empty() ? "" : ", ") + std::string("N=") + fmt(N) + " " + fmt(total);
    }
    return {exact && monotone, "total ops " + detail};
}

Verdict determinism()
{
    ExperimentSpec spec;
    spec.sweep_variable = SweepVariable::Q;
    spec.sweep_values = {8, 12};
    spec.snr_grid_db = {0.0, 20.0};
    spec.trials = 6;
    spec.master_seed = 99;
    spec.als.max_iters = 40;
    const std::string a = format_results(run_sweep(spec, 1));
    const std::string b = format_results(run_sweep(spec, 4));
    return {a == b, std::to_string(a.size()) + " bytes, jobs 1 vs 4 " + (a == b ? "identical" : "differ")};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"noiseless exact recovery", noiseless_recovery},
        {"ALS error histories non-increasing", als_monotone},
        {"tensor identities", tensor_identities},
        {"echo model matches scalar loop", echo_oracle},
        {"ESPRIT exactness", esprit_exact},
        {"more subcarriers lower delay RMSE", q_trend},
        {"more RIS configurations lower every RMSE", k_trend},
        {"higher SNR lowers every RMSE", snr_trend},
        {"identifiability guards", guards},
        {"complexity closed form and growth", complexity},
        {"sweep output independent of worker count", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}

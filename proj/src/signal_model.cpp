#include "ris_sensing/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ris_sensing/errors.hpp"

namespace ris {

namespace {

constexpr cplx kJ{0.0, 1.0};

// [1, e^{-j w}, ..., e^{-j (P-1) w}]
ComplexVector vandermonde(double w, Index P)
{
    ComplexVector v(P);
    for (Index p = 0; p < P; ++p) {
        v(p) = std::exp(-kJ * (static_cast<double>(p) * w));
    }
    return v;
}

Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

} // namespace

std::string to_string(CodebookKind kind)
{
    return kind == CodebookKind::Dft ? "dft" : "kron_dft";
}

CodebookKind parse_codebook_kind(const std::string& text)
{
    if (text == "dft") return CodebookKind::Dft;
    if (text == "kron_dft") return CodebookKind::KroneckerDft;
    throw UsageError("unknown codebook '" + text + "' (expected dft or kron_dft)");
}

ScenarioConfig ScenarioConfig::table1()
{
    ScenarioConfig cfg;
    cfg.K = cfg.N() * cfg.N();
    return cfg;
}

ScenarioConfig ScenarioConfig::desk()
{
    ScenarioConfig cfg;
    cfg.L = 2;
    cfg.N_y = 2;
    cfg.N_z = 2;
    cfg.Q = 8;
    cfg.M = 8;
    cfg.K = 16;
    return cfg;
}

void ScenarioConfig::validate() const
{
    std::ostringstream bad;
    auto count = [&](const char* name, Index v) {
        if (v < 1) bad << ' ' << name << '=' << v;
    };
    auto positive = [&](const char* name, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) bad << ' ' << name << '=' << v;
    };
    count("L", L);
    count("N_y", N_y);
    count("N_z", N_z);
    count("Q", Q);
    count("M", M);
    count("K", K);
    positive("delta_f", delta_f);
    positive("T_s", T_s);
    positive("lambda", lambda);
    positive("d1", d1);
    positive("d2", d2);
    positive("P_t", P_t);
    positive("G1", G1);
    positive("G2", G2);
    positive("F1sq", F1sq);
    positive("F2sq", F2sq);
    positive("d_x", d_x);
    positive("d_y", d_y);
    positive("sigma_rcs", sigma_rcs);
    if (F1sq > 1.0) bad << " F1sq>1";
    if (F2sq > 1.0) bad << " F2sq>1";
    if (bad.str().empty() && std::abs(T_s * delta_f - 1.0) > 1e-12) {
        bad << " T_s*delta_f=" << T_s * delta_f << " (must be 1)";
    }
    if (!bad.str().empty()) {
        throw PreconditionError("invalid scenario:" + bad.str());
    }
}

std::vector<std::string> identifiability_issues(const ScenarioConfig& cfg)
{
    std::vector<std::string> issues;
    const Index N = cfg.N();
    if (cfg.K < N * N) {
        issues.push_back("K=" + std::to_string(cfg.K) + " < N^2=" + std::to_string(N * N));
    }
    if (cfg.MQ() < cfg.L) {
        issues.push_back("M*Q=" + std::to_string(cfg.MQ()) + " < L=" + std::to_string(cfg.L));
    }
    return issues;
}

void require_identifiable(const ScenarioConfig& cfg)
{
    const auto issues = identifiability_issues(cfg);
    if (issues.empty()) return;
    std::string msg = "identifiability bound violated:";
    for (const auto& s : issues) msg += " " + s;
    throw PreconditionError(msg);
}

void TargetParameters::validate(const ScenarioConfig& cfg) const
{
    auto in_principal = [](double w) { return w > -kPi && w <= kPi; };
    std::ostringstream bad;
    if (!in_principal(mu_D)) bad << " mu_D";
    if (!in_principal(psi_D)) bad << " psi_D";
    if (!in_principal(mu_A)) bad << " mu_A";
    if (!in_principal(psi_A)) bad << " psi_A";
    if (!in_principal(eta)) bad << " eta";
    const double delay_cycles = cfg.delta_f * tau;
    if (!(delay_cycles >= 0.0 && delay_cycles < 1.0)) bad << " tau";
    if (!(cfg.T_s * std::abs(nu) < 0.5)) bad << " nu";
    if (!bad.str().empty()) {
        throw PreconditionError("target parameters outside the unambiguous range:" + bad.str());
    }
}

double round_trip_delay(const ScenarioConfig& cfg)
{
    return 2.0 * (cfg.d1 + cfg.d2) / kSpeedOfLight;
}

TargetParameters draw_target(const ScenarioConfig& cfg, Rng& rng)
{
    std::uniform_real_distribution<double> quarter(0.0, kPi / 2.0);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);

    TargetParameters t;
    const double theta_D = quarter(rng);
    const double phi_D = quarter(rng);
    const double theta_A = quarter(rng);
    const double phi_A = quarter(rng);
    const double kappa = quarter(rng);
    t.mu_D = kPi * std::sin(theta_D) * std::sin(phi_D);
    t.psi_D = kPi * std::cos(theta_D);
    t.mu_A = kPi * std::sin(theta_A) * std::sin(phi_A);
    t.psi_A = kPi * std::cos(theta_A);
    t.eta = kPi * std::cos(kappa);
    t.tau = round_trip_delay(cfg);
    t.nu = unit(rng) / cfg.T_s;
    return t;
}

ComplexVector ula_steering(double eta, Index L)
{
    return vandermonde(eta, L);
}

ComplexVector upa_steering(double mu, double psi, Index N_y, Index N_z)
{
    return kronecker(vandermonde(mu, N_y), vandermonde(psi, N_z));
}

ComplexVector delay_steering(double tau, Index Q, double delta_f)
{
    return vandermonde(2.0 * kPi * delta_f * tau, Q);
}

ComplexVector doppler_steering(double nu, Index M, double T_s)
{
    return vandermonde(-2.0 * kPi * T_s * nu, M);
}

double path_gain_magnitude(const ScenarioConfig& cfg)
{
    const double params[] = {cfg.P_t, cfg.G1, cfg.G2, cfg.F1sq, cfg.F2sq, cfg.d_x,
                             cfg.d_y, cfg.lambda, cfg.sigma_rcs, cfg.d1, cfg.d2};
    for (double p : params) {
        if (!(p > 0.0)) {
            throw PreconditionError("path_gain_magnitude: parameters must be positive");
        }
    }
    const double num = cfg.P_t * cfg.G1 * cfg.G1 * cfg.G2 * cfg.G2 * cfg.F1sq * cfg.F1sq * cfg.F2sq * cfg.F2sq
                       * cfg.d_x * cfg.d_x * cfg.d_y * cfg.d_y * cfg.lambda * cfg.lambda * cfg.sigma_rcs;
    const double den = std::pow(4.0 * kPi, 5) * std::pow(cfg.d1, 4) * std::pow(cfg.d2, 4);
    return std::sqrt(num / den);
}

RisCodebook build_dft_codebook(Index N, Index K)
{
    if (N < 1 || K < 1) {
        throw PreconditionError("build_dft_codebook: N and K must be positive");
    }
    const Index D = std::max(N, K);
    ComplexMatrix W(N, K);
    for (Index k = 0; k < K; ++k) {
        for (Index n = 0; n < N; ++n) {
            // reduce n*k modulo D first so the phase argument stays small
            const double phase = 2.0 * kPi * static_cast<double>((n * k) % D) / static_cast<double>(D);
            W(n, k) = std::exp(-kJ * phase);
        }
    }
    return {W};
}

RisCodebook build_kronecker_dft_codebook(Index N_y, Index N_z, Index K)
{
    if (N_y < 1 || N_z < 1 || K < 1) {
        throw PreconditionError("build_kronecker_dft_codebook: dimensions must be positive");
    }
    const Index span_y = 2 * N_y - 1;
    const Index span_z = 2 * N_z - 1;
    const double ratio = static_cast<double>(span_z) / static_cast<double>(span_y);
    Index D_z = std::max(span_z, static_cast<Index>(std::llround(std::sqrt(static_cast<double>(K) * ratio))));
    if (K / D_z < span_y) {
        D_z = std::max(span_z, K / span_y);
    }
    D_z = std::min(D_z, K);
    const Index D_y = ceil_div(K, D_z);

    const Index N = N_y * N_z;
    ComplexMatrix W(N, K);
    for (Index k = 0; k < K; ++k) {
        const Index k_y = k / D_z;
        const Index k_z = k % D_z;
        for (Index ny = 0; ny < N_y; ++ny) {
            for (Index nz = 0; nz < N_z; ++nz) {
                const double phase = 2.0 * kPi
                                     * (static_cast<double>((ny * k_y) % D_y) / static_cast<double>(D_y)
                                        + static_cast<double>((nz * k_z) % D_z) / static_cast<double>(D_z));
                W(ny * N_z + nz, k) = std::exp(-kJ * phase);
            }
        }
    }
    return {W};
}

RisCodebook build_codebook(const ScenarioConfig& cfg)
{
    switch (cfg.codebook) {
    case CodebookKind::Dft: return build_dft_codebook(cfg.N(), cfg.K);
    case CodebookKind::KroneckerDft: return build_kronecker_dft_codebook(cfg.N_y, cfg.N_z, cfg.K);
    }
    throw UsageError("unknown codebook kind");
}

ComplexMatrix build_bs_ris_channel(double eta, double mu_A, double psi_A, const ScenarioConfig& cfg)
{
    return ula_steering(eta, cfg.L) * upa_steering(mu_A, psi_A, cfg.N_y, cfg.N_z).transpose();
}

ComplexTensor3 generate_pilots(const ScenarioConfig& cfg, std::uint64_t seed)
{
    Rng rng(seed);
    ComplexTensor3 X(cfg.L, cfg.M, cfg.Q);
    for (Index q = 0; q < cfg.Q; ++q)
        for (Index m = 0; m < cfg.M; ++m)
            for (Index l = 0; l < cfg.L; ++l)
                X(l, m, q) = complex_gaussian(rng);
    return X;
}

ComplexMatrix pilot_matrix(const ComplexTensor3& pilots)
{
    // mode-1 unfolding puts (m, q) at column m + M*q
    return unfold(pilots, 1);
}

ComplexVector core_vector(const TargetParameters& target, const ScenarioConfig& cfg, cplx alpha)
{
    const ComplexVector p = upa_steering(target.mu_D, target.psi_D, cfg.N_y, cfg.N_z);
    return alpha * kronecker(p, p);
}

ComplexMatrix delay_doppler_factor(const ComplexMatrix& H, const ComplexTensor3& pilots, const ComplexVector& c,
                                   const ComplexVector& d)
{
    const ComplexMatrix X = pilot_matrix(pilots);
    if (X.rows() != H.rows() || X.cols() != c.size() * d.size()) {
        throw DimensionError("delay_doppler_factor: pilot dimensions do not match H, c, d");
    }
    const ComplexVector cd = kronecker(c, d);
    return cd.asDiagonal() * (X.transpose() * H);
}

ComplexTensor3 assemble_echo(const ComplexMatrix& H, const ComplexMatrix& F, const ComplexVector& core,
                             const ComplexMatrix& W)
{
    const Index L = H.rows();
    const Index N = H.cols();
    const Index MQ = F.rows();
    const Index K = W.cols();
    if (F.cols() != N || W.rows() != N || core.size() != N * N) {
        throw DimensionError("assemble_echo: factor dimensions disagree");
    }
    ComplexTensor3 Y(L, MQ, K);
    const ComplexMatrix Ft = F.transpose();
    const ComplexMatrix P = core.reshaped(N, N);
    for (Index k = 0; k < K; ++k) {
        const ComplexVector& w = W.col(k);
        const ComplexMatrix Ck = w.asDiagonal() * P * w.asDiagonal();
        Eigen::Map<ComplexMatrix>(Y.data().data() + k * L * MQ, L, MQ) = H * Ck * Ft;
    }
    return Y;
}

ComplexTensor3 generate_echo_tensor(const ScenarioConfig& cfg, const TargetParameters& target,
                                    const RisCodebook& codebook, const ComplexTensor3& pilots, cplx alpha,
                                    std::vector<std::string>* warnings)
{
    const Index N = cfg.N();
    if (codebook.W.rows() != N || codebook.W.cols() != cfg.K) {
        throw DimensionError("generate_echo_tensor: codebook must be N x K");
    }
    if (pilots.dims() != ComplexTensor3::Dims{cfg.L, cfg.M, cfg.Q}) {
        throw DimensionError("generate_echo_tensor: pilots must be L x M x Q");
    }
    if (warnings != nullptr) {
        for (auto& issue : identifiability_issues(cfg)) {
            warnings->push_back("identifiability: " + issue);
        }
    }
    const ComplexMatrix H = build_bs_ris_channel(target.eta, target.mu_A, target.psi_A, cfg);
    const ComplexVector c = delay_steering(target.tau, cfg.Q, cfg.delta_f);
    const ComplexVector d = doppler_steering(target.nu, cfg.M, cfg.T_s);
    const ComplexMatrix F = delay_doppler_factor(H, pilots, c, d);
    return assemble_echo(H, F, core_vector(target, cfg, alpha), codebook.W);
}

EchoData add_noise_at_snr(const ComplexTensor3& Y_clean, double snr_db, std::uint64_t seed)
{
    const double signal = Y_clean.squared_norm();
    if (!(signal > 0.0)) {
        throw DegenerateInputError("add_noise_at_snr: signal tensor is zero");
    }
    Rng rng(seed);
    ComplexTensor3 Z(Y_clean.dims());
    for (cplx& z : Z.data()) {
        z = complex_gaussian(rng);
    }
    const double snr_lin = std::pow(10.0, snr_db / 10.0);
    const double scale = std::sqrt(signal / (snr_lin * Z.squared_norm()));
    Z *= scale;

    EchoData out;
    out.Y_clean = Y_clean;
    out.Y_noisy = Y_clean + Z;
    const double noise = Z.squared_norm();
    out.noise_variance = noise / static_cast<double>(Z.size());
    out.realized_snr = signal / noise;
    return out;
}

} // namespace ris

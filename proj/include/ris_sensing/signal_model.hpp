#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ris_sensing/random.hpp"
#include "ris_sensing/tensor.hpp"

namespace ris {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

enum class CodebookKind {
    Dft,           ///< truncated 1-D DFT over the flat element index
    KroneckerDft,  ///< 2-D DFT grid over the (y, z) element indices
};

std::string to_string(CodebookKind kind);
CodebookKind parse_codebook_kind(const std::string& text);

/// Physical and dimensional parameters of one sensing scenario.
struct ScenarioConfig {
    Index L = 4;    ///< BS antennas
    Index N_y = 4;  ///< RIS elements along y
    Index N_z = 4;  ///< RIS elements along z
    Index Q = 16;   ///< subcarriers
    Index M = 64;   ///< OFDM symbols per block
    Index K = 256;  ///< blocks (RIS configurations)

    double delta_f = 120e3;        ///< subcarrier spacing [Hz]
    double T_s = 1.0 / 120e3;      ///< symbol duration [s]
    double lambda = 1.07e-2;       ///< wavelength [m]
    double d1 = 10.0;              ///< BS-RIS distance [m]
    double d2 = 5.0;               ///< RIS-target distance [m]
    double P_t = 1.0;              ///< transmit power [W]
    double G1 = 1.0;               ///< BS transmit antenna gain
    double G2 = 1.0;               ///< BS receive antenna gain
    double F1sq = 1.0;             ///< RIS power pattern towards the BS
    double F2sq = 1.0;             ///< RIS power pattern towards the target
    double d_x = 1.07e-2 / 2.0;    ///< RIS spacing, horizontal [m]
    double d_y = 1.07e-2 / 2.0;    ///< RIS spacing, vertical [m]
    double sigma_rcs = 2.0;        ///< radar cross section [m^2]

    CodebookKind codebook = CodebookKind::KroneckerDft;

    Index N() const { return N_y * N_z; }
    Index MQ() const { return M * Q; }

    /// Full-size simulation parameters (16-element RIS, 64 symbols, 16 subcarriers).
    static ScenarioConfig table1();
    /// Small configuration used for tests and default CLI runs.
    static ScenarioConfig desk();

    /// Throws PreconditionError for nonpositive counts or physical quantities.
    void validate() const;
};

/// Identifiability violations (K >= N^2, MQ >= L); empty when the bounds hold.
std::vector<std::string> identifiability_issues(const ScenarioConfig& cfg);

/// Throws PreconditionError listing every identifiability violation.
void require_identifiable(const ScenarioConfig& cfg);

struct TargetParameters {
    double tau = 0.0;     ///< delay [s]
    double nu = 0.0;      ///< Doppler shift [Hz]
    double mu_D = 0.0;    ///< RIS-target horizontal spatial frequency [rad]
    double psi_D = 0.0;   ///< RIS-target vertical spatial frequency [rad]
    double mu_A = 0.0;    ///< BS-RIS horizontal spatial frequency [rad]
    double psi_A = 0.0;   ///< BS-RIS vertical spatial frequency [rad]
    double eta = 0.0;     ///< BS array spatial frequency [rad]

    /// Throws PreconditionError outside the unambiguous estimation range.
    void validate(const ScenarioConfig& cfg) const;
};

/// Round-trip delay over the BS-RIS-target geometry.
double round_trip_delay(const ScenarioConfig& cfg);

/// Draws a target: elevation/azimuth angles uniform on [0, pi/2] for both RIS
/// links, BS departure angle uniform on [0, pi/2], Doppler uniform in the
/// unambiguous range, and the round-trip delay of the configured geometry.
TargetParameters draw_target(const ScenarioConfig& cfg, Rng& rng);

struct RisCodebook {
    ComplexMatrix W;  ///< N x K, unit-modulus entries
};

ComplexVector ula_steering(double eta, Index L);
ComplexVector upa_steering(double mu, double psi, Index N_y, Index N_z);
ComplexVector delay_steering(double tau, Index Q, double delta_f);
ComplexVector doppler_steering(double nu, Index M, double T_s);

double path_gain_magnitude(const ScenarioConfig& cfg);

/// W[n, k] = exp(-j 2 pi n k / D), D = max(N, K).
RisCodebook build_dft_codebook(Index N, Index K);

/// w_k = u_y(k_y) kron u_z(k_z) over a D_y x D_z DFT grid with D_y >= 2 N_y - 1,
/// D_z >= 2 N_z - 1, so that w_k kron w_k separates every pair of index sums.
RisCodebook build_kronecker_dft_codebook(Index N_y, Index N_z, Index K);

RisCodebook build_codebook(const ScenarioConfig& cfg);

/// H = a(eta) b(mu_A, psi_A)^T.
ComplexMatrix build_bs_ris_channel(double eta, double mu_A, double psi_A, const ScenarioConfig& cfg);

/// Pilot tensor X (L x M x Q), i.i.d. unit-variance circular complex Gaussian.
ComplexTensor3 generate_pilots(const ScenarioConfig& cfg, std::uint64_t seed);

/// L x MQ pilot matrix; column q*M + m holds x_{q,m}.
ComplexMatrix pilot_matrix(const ComplexTensor3& pilots);

/// alpha * p kron p, the diagonal of the mode-3 unfolded core.
ComplexVector core_vector(const TargetParameters& target, const ScenarioConfig& cfg, cplx alpha);

/// F(tau, nu) = D(c kron d) X^T H, MQ x N with Doppler index fastest.
ComplexMatrix delay_doppler_factor(const ComplexMatrix& H, const ComplexTensor3& pilots, const ComplexVector& c,
                                   const ComplexVector& d);

/// Tucker assembly with a mode-3-diagonal core:
/// [Y]_(3) = (W kr W)^T D(core) (F kron H)^T, returned as an L x MQ x K tensor.
ComplexTensor3 assemble_echo(const ComplexMatrix& H, const ComplexMatrix& F, const ComplexVector& core,
                             const ComplexMatrix& W);

/// Noiseless echo tensor. Identifiability violations are appended to
/// `warnings` (when given) but do not stop generation.
ComplexTensor3 generate_echo_tensor(const ScenarioConfig& cfg, const TargetParameters& target,
                                    const RisCodebook& codebook, const ComplexTensor3& pilots, cplx alpha,
                                    std::vector<std::string>* warnings = nullptr);

struct EchoData {
    ComplexTensor3 Y_clean;
    ComplexTensor3 Y_noisy;
    double noise_variance = 0.0;  ///< per-entry variance of the scaled noise
    double realized_snr = 0.0;    ///< ||Y_clean||^2 / ||Z||^2 (linear)
};

/// Adds circular Gaussian noise scaled so that ||Y_clean||^2 / ||Z||^2 equals
/// 10^(snr_db/10) exactly. Throws DegenerateInputError for a zero tensor.
EchoData add_noise_at_snr(const ComplexTensor3& Y_clean, double snr_db, std::uint64_t seed);

} // namespace ris

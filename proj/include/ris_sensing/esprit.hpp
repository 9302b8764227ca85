#pragma once

#include <array>
#include <optional>
#include <string>

#include "ris_sensing/signal_model.hpp"
#include "ris_sensing/tensor.hpp"

namespace ris {

/// Frequency of a single complex exponential x[p] = s * exp(j w p), p = 0..P-1.
///
/// Single-snapshot ESPRIT on the Hankel matrix with pencil floor(P/2) + 1.
/// Returns w in (-pi, pi]. Throws PreconditionError for P < 3 and
/// DegenerateInputError for a zero vector.
double esprit_1d(const ComplexVector& x);

struct SpatialFrequencies {
    std::optional<double> mu;   ///< empty when N_y = 1
    std::optional<double> psi;  ///< empty when N_z = 1
};

/// (mu, psi) from vecP = s * (p kron p), p = upa_steering(mu, psi, N_y, N_z).
SpatialFrequencies esprit_2d(const ComplexVector& vecP, Index N_y, Index N_z);

enum class Parameter { Tau, Nu, MuD, PsiD };

inline constexpr std::array<Parameter, 4> kAllParameters = {Parameter::Tau, Parameter::Nu, Parameter::MuD,
                                                            Parameter::PsiD};

std::string to_string(Parameter p);
Parameter parse_parameter(const std::string& text);

struct SensingEstimate {
    double tau = 0.0;  ///< [s], folded into [0, 1/delta_f)
    double nu = 0.0;   ///< [Hz], folded into [-1/(2 T_s), 1/(2 T_s))
    std::optional<double> mu_D;
    std::optional<double> psi_D;
    std::optional<double> theta_D;  ///< set only when the angle mapping is defined
    std::optional<double> phi_D;
    bool angle_mapping_defined = false;

    /// |x - x_hat|^2 / |x|^2 per parameter (|x - x_hat|^2 when x = 0).
    /// Set by attach_truth.
    std::optional<std::array<double, 4>> relative_sq_error;

    std::optional<double> value(Parameter p) const;
    void attach_truth(const TargetParameters& truth);
};

double true_value(const TargetParameters& truth, Parameter p);

/// Delay and Doppler from the stage-2 vectors, spatial frequencies from the
/// normalized core, and the RIS-target angles when they can be mapped back.
SensingEstimate extract_parameters(const ComplexVector& d_hat, const ComplexVector& c_hat,
                                   const ComplexVector& vecP_hat, const ScenarioConfig& cfg);

} // namespace ris

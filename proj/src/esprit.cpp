#include "ris_sensing/esprit.hpp"

#include <cmath>
#include <limits>

#include "ris_sensing/errors.hpp"

namespace ris {

double esprit_1d(const ComplexVector& x)
{
    const Index P = x.size();
    if (P < 3) {
        throw PreconditionError("esprit_1d: need at least 3 samples, got " + std::to_string(P));
    }
    if (x.isZero(0.0)) {
        throw DegenerateInputError("esprit_1d: input vector is zero");
    }
    const Index P1 = P / 2 + 1;
    const Index cols = P - P1 + 1;
    ComplexMatrix hankel(P1, cols);
    for (Index j = 0; j < cols; ++j) {
        hankel.col(j) = x.segment(j, P1);
    }
    const ComplexVector u = svd(hankel).U.col(0);
    const auto u1 = u.head(P1 - 1);
    const auto u2 = u.tail(P1 - 1);
    const double energy = u1.squaredNorm();
    if (!(energy > 0.0)) {
        throw DegenerateInputError("esprit_1d: signal subspace has no shift structure");
    }
    const cplx z = u1.dot(u2) / energy;
    return std::arg(z);
}

SpatialFrequencies esprit_2d(const ComplexVector& vecP, Index N_y, Index N_z)
{
    if (N_y < 1 || N_z < 1) {
        throw DimensionError("esprit_2d: N_y and N_z must be positive");
    }
    const Index N = N_y * N_z;
    if (vecP.size() != N * N) {
        throw DimensionError("esprit_2d: expected " + std::to_string(N * N) + " entries, got "
                             + std::to_string(vecP.size()));
    }
    const ComplexVector p = dominant_rank1(unvec(vecP, N, N)).u;
    // grid(n_z, n_y) = p[n_y N_z + n_z] = p_z p_y^T up to scale
    const Rank1Factor grid = dominant_rank1(unvec(p, N_z, N_y));

    // steering entries are exp(-j w n), ESPRIT reports +w; negation maps
    // (-pi, pi] onto [-pi, pi), so send -pi back to pi
    auto principal = [](double w) { return w <= -kPi ? kPi : w; };
    SpatialFrequencies out;
    if (N_z >= 2) {
        const ComplexVector pz = grid.u;
        out.psi = principal(N_z >= 3 ? -esprit_1d(pz) : -std::arg(pz(1) / pz(0)));
    }
    if (N_y >= 2) {
        const ComplexVector py = grid.v.conjugate();
        out.mu = principal(N_y >= 3 ? -esprit_1d(py) : -std::arg(py(1) / py(0)));
    }
    return out;
}

std::string to_string(Parameter p)
{
    switch (p) {
    case Parameter::Tau: return "tau";
    case Parameter::Nu: return "nu";
    case Parameter::MuD: return "mu_D";
    case Parameter::PsiD: return "psi_D";
    }
    return "?";
}

Parameter parse_parameter(const std::string& text)
{
    for (Parameter p : kAllParameters) {
        if (to_string(p) == text) return p;
    }
    throw UsageError("unknown parameter '" + text + "'");
}

double true_value(const TargetParameters& truth, Parameter p)
{
    switch (p) {
    case Parameter::Tau: return truth.tau;
    case Parameter::Nu: return truth.nu;
    case Parameter::MuD: return truth.mu_D;
    case Parameter::PsiD: return truth.psi_D;
    }
    return 0.0;
}

std::optional<double> SensingEstimate::value(Parameter p) const
{
    switch (p) {
    case Parameter::Tau: return tau;
    case Parameter::Nu: return nu;
    case Parameter::MuD: return mu_D;
    case Parameter::PsiD: return psi_D;
    }
    return std::nullopt;
}

void SensingEstimate::attach_truth(const TargetParameters& truth)
{
    std::array<double, 4> err{};
    for (std::size_t i = 0; i < kAllParameters.size(); ++i) {
        const Parameter p = kAllParameters[i];
        const double x = true_value(truth, p);
        const std::optional<double> xh = value(p);
        if (!xh) {
            err[i] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double diff = (x - *xh) * (x - *xh);
        err[i] = x != 0.0 ? diff / (x * x) : diff;
    }
    relative_sq_error = err;
}

SensingEstimate extract_parameters(const ComplexVector& d_hat, const ComplexVector& c_hat,
                                   const ComplexVector& vecP_hat, const ScenarioConfig& cfg)
{
    SensingEstimate est;

    const double w_c = esprit_1d(c_hat);
    const double period_tau = 1.0 / cfg.delta_f;
    double tau = -w_c / (2.0 * kPi * cfg.delta_f);
    if (tau < 0.0) tau += period_tau;
    if (tau >= period_tau || tau == 0.0) tau = 0.0;
    est.tau = tau;

    const double w_d = esprit_1d(d_hat);
    double nu = w_d / (2.0 * kPi * cfg.T_s);
    if (nu >= 0.5 / cfg.T_s) nu -= 1.0 / cfg.T_s;
    est.nu = nu == 0.0 ? 0.0 : nu;

    const SpatialFrequencies sf = esprit_2d(vecP_hat, cfg.N_y, cfg.N_z);
    est.mu_D = sf.mu;
    est.psi_D = sf.psi;

    if (sf.mu && sf.psi && std::abs(*sf.psi / kPi) <= 1.0) {
        const double theta = std::acos(*sf.psi / kPi);
        const double s = std::sin(theta);
        if (s > 0.0) {
            const double arg = *sf.mu / (kPi * s);
            if (std::abs(arg) <= 1.0) {
                est.theta_D = theta;
                est.phi_D = std::asin(arg);
                est.angle_mapping_defined = true;
            }
        }
    }
    return est;
}

} // namespace ris

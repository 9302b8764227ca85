#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ris_sensing/signal_model.hpp"
#include "ris_sensing/tensor.hpp"

namespace ris {

struct AlsSettings {
    int max_iters = 200;
    /// Stop once |e(i) - e(i-1)| < delta * ||input||_F^2. Stage 2 converges
    /// linearly, so a loose threshold leaves a fit error of about delta / 10
    /// and a delay error of order sqrt(delta).
    double delta = 1e-13;
    std::uint64_t seed = 0;
    /// Relative singular-value cutoff for every pseudoinverse in the updates.
    double pinv_tol = kDefaultPinvTol;

    void validate() const;
};

struct Stage1Estimate {
    ComplexMatrix H_hat;     ///< L x N
    ComplexMatrix F_hat;     ///< MQ x N
    ComplexVector vecP_hat;  ///< N^2, diagonal of the mode-3 unfolded core
    std::vector<double> error_history;
    int iterations = 0;
    bool converged = false;
};

struct Stage2Estimate {
    ComplexVector d_hat;   ///< M
    ComplexVector c_hat;   ///< Q
    ComplexMatrix H_hat2;  ///< L x N
    std::vector<double> error_history;
    int iterations = 0;
    bool converged = false;
};

/// First-stage Tucker fit of the L x MQ x K echo tensor with known codebook.
///
/// Each sweep updates H, F and the core diagonal in that order; the history
/// holds the squared fitting error after every sweep. Throws
/// PreconditionError when K < N^2 or MQ < L, DimensionError on shape
/// mismatch, NumericalDivergenceError on a non-finite error.
Stage1Estimate als_stage1(const ComplexTensor3& Y, const RisCodebook& codebook, const AlsSettings& settings);

/// N x M x Q tensor with F[n, m, q] = F_hat(q*M + m, n).
ComplexTensor3 tensorize_F(const ComplexMatrix& F_hat, Index M, Index Q);

/// Inverse of tensorize_F.
ComplexMatrix flatten_F(const ComplexTensor3& F_tensor);

/// Second-stage fit of F = X x1 H^T x2 D(d) x3 D(c) for (d, c, H) with the
/// pilot tensor X known. d and c start random; H starts from `H_init` when
/// given, random otherwise.
Stage2Estimate als_stage2(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const AlsSettings& settings,
                          const std::optional<ComplexMatrix>& H_init = std::nullopt);

/// Gauge-free estimate of p kron p (up to a complex scalar) from the first stage.
///
/// The fitted echo is rank one in its mode-3 factor g = (W kr W)^T (core o (b kron b)).
/// g is recovered from the stage-1 reconstruction, mapped back to the
/// identifiable (symmetric, sum-aliased) core by the codebook pseudoinverse,
/// and divided by b kron b, where b is the RIS steering towards the BS
/// (fixed deployment geometry).
ComplexVector normalize_core(const Stage1Estimate& stage1, const RisCodebook& codebook,
                             const ComplexVector& bs_ris_steering, double pinv_tol = kDefaultPinvTol);

/// Ground truth used by resolve_scaling (verification only).
struct ScalingReference {
    ComplexMatrix H;       ///< L x N
    ComplexMatrix F;       ///< MQ x N
    ComplexVector vecP;    ///< N^2
    ComplexVector d;       ///< M
    ComplexVector c;       ///< Q
    ComplexMatrix W;       ///< N x K codebook
};

struct ScalingDiagnostics {
    ComplexVector lambda_h;   ///< diagonal of Lambda_h = D(H(1,:) / H_hat(1,:))
    ComplexVector lambda_f;   ///< diagonal of Lambda_f
    ComplexVector lambda_h2;  ///< diagonal of Lambda_h' (stage-2 H)
    cplx lambda_nu;
    cplx lambda_tau;

    // relative Frobenius residuals
    double residual_H = 0.0;
    double residual_F = 0.0;
    double residual_P = 0.0;  ///< core relation, measured through the codebook
    double residual_d = 0.0;
    double residual_c = 0.0;
    double residual_H2 = 0.0;

    double max_residual() const;
};

/// Evaluates the stage-1 and stage-2 scaling relations against ground truth.
/// Throws DegenerateInputError when a normalizing first-row entry is zero.
ScalingDiagnostics resolve_scaling(const Stage1Estimate& stage1, const Stage2Estimate& stage2,
                                   const ScalingReference& reference);

/// Single block updates, exposed for verification against the textbook
/// pseudoinverse formulas.
namespace als_steps {

/// mode-3 Khatri-Rao factor (W kr W)^T, K x N^2
ComplexMatrix codebook_factor(const ComplexMatrix& W);

ComplexMatrix stage1_update_H(const ComplexTensor3& Y, const ComplexMatrix& G, const ComplexMatrix& F,
                              const ComplexVector& vecP, double tol);
ComplexMatrix stage1_update_F(const ComplexTensor3& Y, const ComplexMatrix& G, const ComplexMatrix& H,
                              const ComplexVector& vecP, double tol);
ComplexVector stage1_update_core(const ComplexTensor3& Y, const ComplexMatrix& G, const ComplexMatrix& H,
                                 const ComplexMatrix& F, double tol);
double stage1_error(const ComplexTensor3& Y, const ComplexMatrix& G, const ComplexMatrix& H,
                    const ComplexMatrix& F, const ComplexVector& vecP);

ComplexVector stage2_update_d(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const ComplexVector& c,
                              const ComplexMatrix& H, double tol);
ComplexVector stage2_update_c(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const ComplexVector& d,
                              const ComplexMatrix& H, double tol);
ComplexMatrix stage2_update_H(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const ComplexVector& c,
                              const ComplexVector& d, double tol);
double stage2_error(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const ComplexVector& c,
                    const ComplexVector& d, const ComplexMatrix& H);

} // namespace als_steps

} // namespace ris

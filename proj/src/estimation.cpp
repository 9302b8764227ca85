#include "ris_sensing/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ris_sensing/errors.hpp"
#include "ris_sensing/random.hpp"

namespace ris {

namespace {

// Y * pinv(A) without forming pinv(A) explicitly.
ComplexMatrix right_solve(const ComplexMatrix& Y, const ComplexMatrix& A, double tol)
{
    const SvdFactors f = svd(A);
    const RealVector& s = f.singular_values;
    const double cutoff = s.size() > 0 ? tol * s(0) : 0.0;
    Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff && s(rank) > 0.0) ++rank;
    if (rank == 0) {
        return ComplexMatrix::Zero(Y.rows(), A.rows());
    }
    ComplexMatrix YV = Y * f.V.leftCols(rank);
    for (Index r = 0; r < rank; ++r) YV.col(r) /= s(r);
    return YV * f.U.leftCols(rank).adjoint();
}

struct ThinQr {
    ComplexMatrix Q;  ///< rows x r, orthonormal columns
    ComplexMatrix R;  ///< r x cols
};

ThinQr thin_qr(const ComplexMatrix& A)
{
    const Index r = std::min(A.rows(), A.cols());
    Eigen::HouseholderQR<ComplexMatrix> qr(A);
    ThinQr out;
    out.Q = qr.householderQ() * ComplexMatrix::Identity(A.rows(), r);
    out.R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    return out;
}

// D(w_k) P D(w_k) for block k, read from the Khatri-Rao factor row.
ComplexMatrix block_core(const ComplexMatrix& G, const ComplexVector& vecP, Index k, Index N)
{
    return (vecP.array() * G.row(k).transpose().array()).matrix().reshaped(N, N);
}

Eigen::Map<const ComplexMatrix> frontal_slice(const ComplexTensor3& Y, Index k)
{
    const Index L = Y.dims()[0];
    const Index MQ = Y.dims()[1];
    return Eigen::Map<const ComplexMatrix>(Y.data().data() + k * L * MQ, L, MQ);
}

Index core_side(const ComplexMatrix& G)
{
    const Index N = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(G.cols()))));
    if (N * N != G.cols()) {
        throw DimensionError("codebook factor must have N^2 columns");
    }
    return N;
}

void check_finite(double e, const char* stage, int iter)
{
    if (!std::isfinite(e)) {
        throw NumericalDivergenceError(std::string(stage) + ": non-finite fitting error at iteration "
                                       + std::to_string(iter));
    }
}

// Stage-2 model product X^T H, MQ x N with row m + M*q.
ComplexMatrix pilots_times_H(const ComplexTensor3& pilots, const ComplexMatrix& H)
{
    return unfold(pilots, 1).transpose() * H;
}

// Exact LS for one diagonal factor. The system matrix has orthogonal
// columns, so the pseudoinverse reduces to per-entry projections; column
// norms are the singular values.
ComplexVector diagonal_ls(const Eigen::ArrayXcd& num, const Eigen::ArrayXd& den, double tol)
{
    const double max_sv = den.size() > 0 ? std::sqrt(den.maxCoeff()) : 0.0;
    ComplexVector out(num.size());
    for (Index i = 0; i < num.size(); ++i) {
        const double sv = std::sqrt(den(i));
        out(i) = (sv > tol * max_sv && sv > 0.0) ? num(i) / den(i) : cplx{0.0, 0.0};
    }
    return out;
}

} // namespace

void AlsSettings::validate() const
{
    if (max_iters < 1) throw PreconditionError("ALS max_iters must be >= 1");
    if (!(delta > 0.0)) throw PreconditionError("ALS delta must be > 0");
    if (!(pinv_tol >= 0.0)) throw PreconditionError("ALS pinv_tol must be >= 0");
}

namespace als_steps {

ComplexMatrix codebook_factor(const ComplexMatrix& W)
{
    return khatri_rao(W, W).transpose();
}

ComplexMatrix stage1_update_H(const ComplexTensor3& Y, const ComplexMatrix& G, const ComplexMatrix& F,
                              const ComplexVector& vecP, double tol)
{
    const Index N = core_side(G);
    const Index L = Y.dims()[0];
    const Index MQ = Y.dims()[1];
    const Index K = Y.dims()[2];
    // A1 = [P]_(1) (G kron F)^T, block k = C_k F^T
    ComplexMatrix A1(N, MQ * K);
    const ComplexMatrix Ft = F.transpose();
    for (Index k = 0; k < K; ++k) {
        A1.middleCols(k * MQ, MQ) = block_core(G, vecP, k, N) * Ft;
    }
    const Eigen::Map<const ComplexMatrix> Y1(Y.data().data(), L, MQ * K);
    return right_solve(Y1, A1, tol);
}

ComplexMatrix stage1_update_F(const ComplexTensor3& Y, const ComplexMatrix& G, const ComplexMatrix& H,
                              const ComplexVector& vecP, double tol)
{
    const Index N = core_side(G);
    const Index L = Y.dims()[0];
    const Index K = Y.dims()[2];
    // A2 = [P]_(2) (G kron H)^T, block k = C_k^T H^T
    ComplexMatrix A2(N, L * K);
    const ComplexMatrix Ht = H.transpose();
    for (Index k = 0; k < K; ++k) {
        A2.middleCols(k * L, L) = block_core(G, vecP, k, N).transpose() * Ht;
    }
    return right_solve(unfold(Y, 2), A2, tol);
}

ComplexVector stage1_update_core(const ComplexTensor3& Y, const ComplexMatrix& G, const ComplexMatrix& H,
                                 const ComplexMatrix& F, double tol)
{
    // vec([Y]_(3)) = [(F kron H) kr G] vecP. With F = Q_F R_F and H = Q_H R_H,
    // F kron H = (Q_F kron Q_H)(R_F kron R_H) and the orthonormal factor can be
    // applied to the data instead, leaving the (r_F r_H K) x N^2 system
    // [(R_F kron R_H) kr G] with the same singular values.
    const ThinQr qf = thin_qr(F);
    const ThinQr qh = thin_qr(H);
    const ComplexMatrix projected = unfold(Y, 3) * kronecker(qf.Q, qh.Q).conjugate();
    const ComplexMatrix system = khatri_rao(kronecker(qf.R, qh.R), G);
    return pseudoinverse(system, tol) * vec(projected);
}

double stage1_error(const ComplexTensor3& Y, const ComplexMatrix& G, const ComplexMatrix& H,
                    const ComplexMatrix& F, const ComplexVector& vecP)
{
    const Index N = core_side(G);
    const ComplexMatrix Ft = F.transpose();
    double e = 0.0;
    for (Index k = 0; k < Y.dims()[2]; ++k) {
        e += (frontal_slice(Y, k) - H * block_core(G, vecP, k, N) * Ft).squaredNorm();
    }
    return e;
}

ComplexVector stage2_update_d(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const ComplexVector& c,
                              const ComplexMatrix& H, double tol)
{
    const auto [N, M, Q] = F_tensor.dims();
    const ComplexMatrix XH = pilots_times_H(pilots, H);
    Eigen::ArrayXcd num = Eigen::ArrayXcd::Zero(M);
    Eigen::ArrayXd den = Eigen::ArrayXd::Zero(M);
    for (Index q = 0; q < Q; ++q)
        for (Index m = 0; m < M; ++m)
            for (Index n = 0; n < N; ++n) {
                const cplx b = c(q) * XH(m + M * q, n);
                num(m) += std::conj(b) * F_tensor(n, m, q);
                den(m) += std::norm(b);
            }
    return diagonal_ls(num, den, tol);
}

ComplexVector stage2_update_c(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const ComplexVector& d,
                              const ComplexMatrix& H, double tol)
{
    const auto [N, M, Q] = F_tensor.dims();
    const ComplexMatrix XH = pilots_times_H(pilots, H);
    Eigen::ArrayXcd num = Eigen::ArrayXcd::Zero(Q);
    Eigen::ArrayXd den = Eigen::ArrayXd::Zero(Q);
    for (Index q = 0; q < Q; ++q)
        for (Index m = 0; m < M; ++m)
            for (Index n = 0; n < N; ++n) {
                const cplx b = d(m) * XH(m + M * q, n);
                num(q) += std::conj(b) * F_tensor(n, m, q);
                den(q) += std::norm(b);
            }
    return diagonal_ls(num, den, tol);
}

ComplexMatrix stage2_update_H(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const ComplexVector& c,
                              const ComplexVector& d, double tol)
{
    // [F]_(1) = H^T [X]_(1) (D(c) kron D(d))^T
    const ComplexVector cd = kronecker(c, d);
    const ComplexMatrix Z = unfold(pilots, 1) * cd.asDiagonal();
    return right_solve(unfold(F_tensor, 1), Z, tol).transpose();
}

double stage2_error(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const ComplexVector& c,
                    const ComplexVector& d, const ComplexMatrix& H)
{
    const auto [N, M, Q] = F_tensor.dims();
    const ComplexMatrix XH = pilots_times_H(pilots, H);
    double e = 0.0;
    for (Index q = 0; q < Q; ++q)
        for (Index m = 0; m < M; ++m) {
            const cplx cd = c(q) * d(m);
            for (Index n = 0; n < N; ++n) {
                e += std::norm(F_tensor(n, m, q) - cd * XH(m + M * q, n));
            }
        }
    return e;
}

} // namespace als_steps

Stage1Estimate als_stage1(const ComplexTensor3& Y, const RisCodebook& codebook, const AlsSettings& settings)
{
    settings.validate();
    const auto [L, MQ, K] = Y.dims();
    const ComplexMatrix& W = codebook.W;
    const Index N = W.rows();
    if (W.cols() != K) {
        throw DimensionError("als_stage1: codebook has " + std::to_string(W.cols()) + " columns, tensor has K="
                             + std::to_string(K));
    }
    if (K < N * N || MQ < L) {
        throw PreconditionError("als_stage1: identifiability requires K >= N^2 and MQ >= L (K=" + std::to_string(K)
                                + ", N=" + std::to_string(N) + ", MQ=" + std::to_string(MQ)
                                + ", L=" + std::to_string(L) + ")");
    }
    const double scale = Y.squared_norm();
    if (!(scale > 0.0)) {
        throw DegenerateInputError("als_stage1: echo tensor is zero");
    }

    const ComplexMatrix G = als_steps::codebook_factor(W);
    Rng rng(derive_seed({settings.seed, 1}));
    Stage1Estimate est;
    est.H_hat = random_complex_matrix(L, N, rng);
    est.F_hat = random_complex_matrix(MQ, N, rng);
    est.vecP_hat = random_complex_matrix(N * N, 1, rng);

    const double tol = settings.pinv_tol;
    for (int i = 1; i <= settings.max_iters; ++i) {
        est.H_hat = als_steps::stage1_update_H(Y, G, est.F_hat, est.vecP_hat, tol);
        est.F_hat = als_steps::stage1_update_F(Y, G, est.H_hat, est.vecP_hat, tol);
        est.vecP_hat = als_steps::stage1_update_core(Y, G, est.H_hat, est.F_hat, tol);
        const double e = als_steps::stage1_error(Y, G, est.H_hat, est.F_hat, est.vecP_hat);
        check_finite(e, "als_stage1", i);
        est.error_history.push_back(e);
        est.iterations = i;
        if (i >= 2 && std::abs(e - est.error_history[i - 2]) < settings.delta * scale) {
            est.converged = true;
            break;
        }
    }
    return est;
}

ComplexTensor3 tensorize_F(const ComplexMatrix& F_hat, Index M, Index Q)
{
    if (M < 1 || Q < 1 || F_hat.rows() != M * Q) {
        throw DimensionError("tensorize_F: F_hat has " + std::to_string(F_hat.rows()) + " rows, expected M*Q="
                             + std::to_string(M * Q));
    }
    const Index N = F_hat.cols();
    ComplexTensor3 T(N, M, Q);
    for (Index q = 0; q < Q; ++q)
        for (Index m = 0; m < M; ++m)
            for (Index n = 0; n < N; ++n)
                T(n, m, q) = F_hat(q * M + m, n);
    return T;
}

ComplexMatrix flatten_F(const ComplexTensor3& F_tensor)
{
    // [F]_(1) is N x MQ with column m + M*q
    return unfold(F_tensor, 1).transpose();
}

Stage2Estimate als_stage2(const ComplexTensor3& F_tensor, const ComplexTensor3& pilots, const AlsSettings& settings,
                          const std::optional<ComplexMatrix>& H_init)
{
    settings.validate();
    const auto [N, M, Q] = F_tensor.dims();
    const Index L = pilots.dims()[0];
    if (pilots.dims()[1] != M || pilots.dims()[2] != Q) {
        throw DimensionError("als_stage2: pilot tensor must be L x M x Q matching the F tensor");
    }
    if (M * Q < L) {
        throw PreconditionError("als_stage2: identifiability requires MQ >= L");
    }
    if (H_init && (H_init->rows() != L || H_init->cols() != N)) {
        throw DimensionError("als_stage2: initial H must be L x N");
    }
    const double scale = F_tensor.squared_norm();
    if (!(scale > 0.0)) {
        throw DegenerateInputError("als_stage2: F tensor is zero");
    }

    Rng rng(derive_seed({settings.seed, 2}));
    Stage2Estimate est;
    est.d_hat = random_complex_matrix(M, 1, rng);
    est.c_hat = random_complex_matrix(Q, 1, rng);
    est.H_hat2 = H_init ? *H_init : random_complex_matrix(L, N, rng);

    const double tol = settings.pinv_tol;
    for (int i = 1; i <= settings.max_iters; ++i) {
        est.d_hat = als_steps::stage2_update_d(F_tensor, pilots, est.c_hat, est.H_hat2, tol);
        est.c_hat = als_steps::stage2_update_c(F_tensor, pilots, est.d_hat, est.H_hat2, tol);
        est.H_hat2 = als_steps::stage2_update_H(F_tensor, pilots, est.c_hat, est.d_hat, tol);
        const double e = als_steps::stage2_error(F_tensor, pilots, est.c_hat, est.d_hat, est.H_hat2);
        check_finite(e, "als_stage2", i);
        est.error_history.push_back(e);
        est.iterations = i;
        if (i >= 2 && std::abs(e - est.error_history[i - 2]) < settings.delta * scale) {
            est.converged = true;
            break;
        }
    }
    return est;
}

ComplexVector normalize_core(const Stage1Estimate& stage1, const RisCodebook& codebook,
                             const ComplexVector& bs_ris_steering, double pinv_tol)
{
    const Index N = codebook.W.rows();
    if (stage1.vecP_hat.size() != N * N || bs_ris_steering.size() != N || stage1.H_hat.cols() != N
        || stage1.F_hat.cols() != N) {
        throw DimensionError("normalize_core: estimate, codebook and steering sizes disagree");
    }
    if ((bs_ris_steering.array() == cplx{0.0, 0.0}).any()) {
        throw DegenerateInputError("normalize_core: BS-RIS steering has a zero entry");
    }
    const ComplexMatrix G = als_steps::codebook_factor(codebook.W);
    // [Y_hat]_(3) = G D(vecP) (F kron H)^T shares its left singular vectors
    // with G D(vecP) (R_F kron R_H)^T.
    const ComplexMatrix RF = thin_qr(stage1.F_hat).R;
    const ComplexMatrix RH = thin_qr(stage1.H_hat).R;
    const ComplexMatrix reduced = G * stage1.vecP_hat.asDiagonal() * kronecker(RF, RH).transpose();
    const Rank1Factor lead = dominant_rank1(reduced);
    const ComplexVector g = lead.sigma * lead.u;
    const ComplexVector core = pseudoinverse(G, pinv_tol) * g;
    return (core.array() / kronecker(bs_ris_steering, bs_ris_steering).array()).matrix();
}

double ScalingDiagnostics::max_residual() const
{
    return std::max({residual_H, residual_F, residual_P, residual_d, residual_c, residual_H2});
}

ScalingDiagnostics resolve_scaling(const Stage1Estimate& stage1, const Stage2Estimate& stage2,
                                   const ScalingReference& ref)
{
    auto first_row_ratio = [](const ComplexMatrix& truth, const ComplexMatrix& est, const char* what) {
        if (truth.cols() != est.cols() || truth.rows() != est.rows()) {
            throw DimensionError(std::string("resolve_scaling: shape mismatch for ") + what);
        }
        if ((est.row(0).array() == cplx{0.0, 0.0}).any()) {
            throw DegenerateInputError(std::string("resolve_scaling: zero first-row entry in estimated ") + what);
        }
        return ComplexVector((truth.row(0).array() / est.row(0).array()).transpose());
    };
    auto scalar_ratio = [](const ComplexVector& truth, const ComplexVector& est, const char* what) {
        if (truth.size() != est.size() || est.size() == 0) {
            throw DimensionError(std::string("resolve_scaling: size mismatch for ") + what);
        }
        if (est(0) == cplx{0.0, 0.0}) {
            throw DegenerateInputError(std::string("resolve_scaling: zero first entry in estimated ") + what);
        }
        return truth(0) / est(0);
    };
    auto rel = [](const auto& diff, const auto& base) {
        const double b = base.norm();
        return b > 0.0 ? diff.norm() / b : diff.norm();
    };

    ScalingDiagnostics out;
    out.lambda_h = first_row_ratio(ref.H, stage1.H_hat, "H");
    out.lambda_f = first_row_ratio(ref.F, stage1.F_hat, "F");
    out.lambda_h2 = first_row_ratio(ref.H, stage2.H_hat2, "stage-2 H");
    out.lambda_nu = scalar_ratio(ref.d, stage2.d_hat, "d");
    out.lambda_tau = scalar_ratio(ref.c, stage2.c_hat, "c");

    out.residual_H = rel(ComplexMatrix(ref.H - stage1.H_hat * out.lambda_h.asDiagonal()), ref.H);
    out.residual_F = rel(ComplexMatrix(ref.F - stage1.F_hat * out.lambda_f.asDiagonal()), ref.F);
    out.residual_H2 = rel(ComplexMatrix(ref.H - stage2.H_hat2 * out.lambda_h2.asDiagonal()), ref.H);
    out.residual_d = rel(ComplexVector(ref.d - out.lambda_nu * stage2.d_hat), ref.d);
    out.residual_c = rel(ComplexVector(ref.c - out.lambda_tau * stage2.c_hat), ref.c);

    // vecP = vecP_hat / (lambda_f kron lambda_h), compared through the codebook
    // since only G-visible combinations of the core are identifiable.
    const ComplexMatrix G = als_steps::codebook_factor(ref.W);
    const ComplexVector weights = kronecker(ComplexVector(stage1.F_hat.row(0).transpose()),
                                            ComplexVector(stage1.H_hat.row(0).transpose()));
    const ComplexVector gauge = kronecker(out.lambda_f, out.lambda_h);
    const ComplexVector lhs = G * (weights.array() * gauge.array() * ref.vecP.array()).matrix();
    const ComplexVector rhs = G * (weights.array() * stage1.vecP_hat.array()).matrix();
    out.residual_P = rel(ComplexVector(lhs - rhs), rhs);
    return out;
}

} // namespace ris

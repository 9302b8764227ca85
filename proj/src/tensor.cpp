#include "ris_sensing/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ris_sensing/errors.hpp"

namespace ris {

namespace {

void check_mode(int mode)
{
    if (mode < 1 || mode > 3) {
        throw UsageError("tensor mode must be 1, 2 or 3, got " + std::to_string(mode));
    }
}

std::array<Index, 2> unfolding_shape(const ComplexTensor3::Dims& d, int mode)
{
    switch (mode) {
    case 1: return {d[0], d[1] * d[2]};
    case 2: return {d[1], d[0] * d[2]};
    default: return {d[2], d[0] * d[1]};
    }
}

} // namespace

ComplexTensor3::ComplexTensor3(Dims dims)
    : dims_(dims)
{
    for (Index d : dims_) {
        if (d < 0) {
            throw DimensionError("tensor dimensions must be nonnegative");
        }
    }
    data_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]), cplx{0.0, 0.0});
}

Index ComplexTensor3::dim(int mode) const
{
    check_mode(mode);
    return dims_[mode - 1];
}

double ComplexTensor3::squared_norm() const
{
    double acc = 0.0;
    for (const cplx& x : data_) {
        acc += std::norm(x);
    }
    return acc;
}

bool ComplexTensor3::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](const cplx& x) {
        return std::isfinite(x.real()) && std::isfinite(x.imag());
    });
}

ComplexTensor3& ComplexTensor3::operator+=(const ComplexTensor3& other)
{
    if (dims_ != other.dims_) {
        throw DimensionError("tensor addition with mismatched dimensions");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += other.data_[i];
    }
    return *this;
}

ComplexTensor3& ComplexTensor3::operator-=(const ComplexTensor3& other)
{
    if (dims_ != other.dims_) {
        throw DimensionError("tensor subtraction with mismatched dimensions");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= other.data_[i];
    }
    return *this;
}

ComplexTensor3& ComplexTensor3::operator*=(cplx s)
{
    for (cplx& x : data_) {
        x *= s;
    }
    return *this;
}

ComplexMatrix kronecker(const ComplexMatrix& a, const ComplexMatrix& b)
{
    const Index br = b.rows();
    const Index bc = b.cols();
    ComplexMatrix out(a.rows() * br, a.cols() * bc);
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            out.block(i * br, j * bc, br, bc) = a(i, j) * b;
        }
    }
    return out;
}

ComplexMatrix khatri_rao(const ComplexMatrix& a, const ComplexMatrix& b)
{
    if (a.cols() != b.cols()) {
        throw DimensionError("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs "
                             + std::to_string(b.cols()) + ")");
    }
    const Index br = b.rows();
    ComplexMatrix out(a.rows() * br, a.cols());
    for (Index r = 0; r < a.cols(); ++r) {
        for (Index i = 0; i < a.rows(); ++i) {
            out.col(r).segment(i * br, br) = a(i, r) * b.col(r);
        }
    }
    return out;
}

ComplexMatrix elementwise_divide(const ComplexMatrix& a, const ComplexMatrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("elementwise_divide: shapes differ");
    }
    if ((b.array() == cplx{0.0, 0.0}).any()) {
        throw DegenerateInputError("elementwise_divide: zero divisor entry");
    }
    return (a.array() / b.array()).matrix();
}

ComplexMatrix unfold(const ComplexTensor3& t, int mode)
{
    check_mode(mode);
    const auto& d = t.dims();
    const auto [rows, cols] = unfolding_shape(d, mode);
    ComplexMatrix out(rows, cols);
    switch (mode) {
    case 1:
        for (Index i3 = 0; i3 < d[2]; ++i3)
            for (Index i2 = 0; i2 < d[1]; ++i2)
                for (Index i1 = 0; i1 < d[0]; ++i1)
                    out(i1, i2 + d[1] * i3) = t(i1, i2, i3);
        break;
    case 2:
        for (Index i3 = 0; i3 < d[2]; ++i3)
            for (Index i2 = 0; i2 < d[1]; ++i2)
                for (Index i1 = 0; i1 < d[0]; ++i1)
                    out(i2, i1 + d[0] * i3) = t(i1, i2, i3);
        break;
    default:
        for (Index i3 = 0; i3 < d[2]; ++i3)
            for (Index i2 = 0; i2 < d[1]; ++i2)
                for (Index i1 = 0; i1 < d[0]; ++i1)
                    out(i3, i1 + d[0] * i2) = t(i1, i2, i3);
        break;
    }
    return out;
}

ComplexTensor3 fold(const ComplexMatrix& m, int mode, const ComplexTensor3::Dims& d)
{
    check_mode(mode);
    const auto [rows, cols] = unfolding_shape(d, mode);
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols())
                             + ", mode-" + std::to_string(mode) + " unfolding needs " + std::to_string(rows)
                             + "x" + std::to_string(cols));
    }
    ComplexTensor3 t(d);
    switch (mode) {
    case 1:
        for (Index i3 = 0; i3 < d[2]; ++i3)
            for (Index i2 = 0; i2 < d[1]; ++i2)
                for (Index i1 = 0; i1 < d[0]; ++i1)
                    t(i1, i2, i3) = m(i1, i2 + d[1] * i3);
        break;
    case 2:
        for (Index i3 = 0; i3 < d[2]; ++i3)
            for (Index i2 = 0; i2 < d[1]; ++i2)
                for (Index i1 = 0; i1 < d[0]; ++i1)
                    t(i1, i2, i3) = m(i2, i1 + d[0] * i3);
        break;
    default:
        for (Index i3 = 0; i3 < d[2]; ++i3)
            for (Index i2 = 0; i2 < d[1]; ++i2)
                for (Index i1 = 0; i1 < d[0]; ++i1)
                    t(i1, i2, i3) = m(i3, i1 + d[0] * i2);
        break;
    }
    return t;
}

ComplexTensor3 mode_product(const ComplexTensor3& t, const ComplexMatrix& m, int mode)
{
    check_mode(mode);
    if (m.cols() != t.dim(mode)) {
        throw DimensionError("mode_product: matrix has " + std::to_string(m.cols()) + " columns, mode-"
                             + std::to_string(mode) + " dimension is " + std::to_string(t.dim(mode)));
    }
    auto dims = t.dims();
    dims[mode - 1] = m.rows();
    return fold(m * unfold(t, mode), mode, dims);
}

SvdFactors svd(const ComplexMatrix& m)
{
    Eigen::BDCSVD<ComplexMatrix> fast(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdFactors f{fast.matrixU(), fast.singularValues(), fast.matrixV()};
    // BDCSVD in Eigen 3.4.0 returns wrong factors for some rank-deficient
    // inputs (e.g. the squared codebook at K = 36); fall back to Jacobi then.
    const double scale = m.norm();
    const double resid = (f.U * f.singular_values.cast<cplx>().asDiagonal() * f.V.adjoint() - m).norm();
    if (!(resid <= 1e-10 * scale)) {
        Eigen::JacobiSVD<ComplexMatrix> slow(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        f = {slow.matrixU(), slow.singularValues(), slow.matrixV()};
    }
    return f;
}

ComplexMatrix pseudoinverse(const ComplexMatrix& m, double tol)
{
    if (m.size() == 0) {
        return ComplexMatrix::Zero(m.cols(), m.rows());
    }
    const SvdFactors f = svd(m);
    const double cutoff = tol * (f.singular_values.size() > 0 ? f.singular_values(0) : 0.0);
    ComplexMatrix out = ComplexMatrix::Zero(m.cols(), m.rows());
    for (Index r = 0; r < f.singular_values.size(); ++r) {
        const double s = f.singular_values(r);
        if (s <= cutoff || s == 0.0) {
            break;
        }
        out.noalias() += (f.V.col(r) / s) * f.U.col(r).adjoint();
    }
    return out;
}

Rank1Factor dominant_rank1(const ComplexMatrix& m)
{
    if (m.size() == 0 || m.isZero(0.0)) {
        throw DegenerateInputError("dominant_rank1: zero matrix");
    }
    const SvdFactors f = svd(m);
    return {f.U.col(0), f.singular_values(0), f.V.col(0)};
}

ComplexVector vec(const ComplexMatrix& m)
{
    return m.reshaped();
}

ComplexMatrix unvec(const ComplexVector& v, Index rows, Index cols)
{
    if (rows < 0 || cols < 0 || v.size() != rows * cols) {
        throw DimensionError("unvec: length " + std::to_string(v.size()) + " does not match "
                             + std::to_string(rows) + "x" + std::to_string(cols));
    }
    return v.reshaped(rows, cols);
}

ComplexMatrix diag(const ComplexVector& v)
{
    return v.asDiagonal();
}

} // namespace ris

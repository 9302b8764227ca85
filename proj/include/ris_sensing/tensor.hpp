#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace ris {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative singular-value cutoff used by pseudoinverse() unless overridden.
inline constexpr double kDefaultPinvTol = 1e-12;

/// Dense third-order complex tensor.
///
/// Entries are stored with the first index fastest, so the linear offset of
/// (i1, i2, i3) is i1 + I1 * (i2 + I2 * i3). All indices are zero-based.
class ComplexTensor3 {
public:
    using Dims = std::array<Index, 3>;

    ComplexTensor3() = default;
    explicit ComplexTensor3(Dims dims);
    ComplexTensor3(Index d1, Index d2, Index d3) : ComplexTensor3(Dims{d1, d2, d3}) {}

    const Dims& dims() const { return dims_; }
    Index dim(int mode) const;
    Index size() const { return static_cast<Index>(data_.size()); }

    cplx& operator()(Index i1, Index i2, Index i3) { return data_[offset(i1, i2, i3)]; }
    const cplx& operator()(Index i1, Index i2, Index i3) const { return data_[offset(i1, i2, i3)]; }

    std::vector<cplx>& data() { return data_; }
    const std::vector<cplx>& data() const { return data_; }

    double squared_norm() const;
    bool all_finite() const;

    ComplexTensor3& operator+=(const ComplexTensor3& other);
    ComplexTensor3& operator-=(const ComplexTensor3& other);
    ComplexTensor3& operator*=(cplx s);

    friend ComplexTensor3 operator+(ComplexTensor3 a, const ComplexTensor3& b) { return a += b; }
    friend ComplexTensor3 operator-(ComplexTensor3 a, const ComplexTensor3& b) { return a -= b; }
    friend ComplexTensor3 operator*(ComplexTensor3 a, cplx s) { return a *= s; }
    friend ComplexTensor3 operator*(cplx s, ComplexTensor3 a) { return a *= s; }

    bool operator==(const ComplexTensor3& other) const = default;

private:
    std::size_t offset(Index i1, Index i2, Index i3) const
    {
        return static_cast<std::size_t>(i1 + dims_[0] * (i2 + dims_[1] * i3));
    }

    Dims dims_{0, 0, 0};
    std::vector<cplx> data_;
};

struct SvdFactors {
    ComplexMatrix U;
    RealVector singular_values;  ///< descending, nonnegative
    ComplexMatrix V;
};

struct Rank1Factor {
    ComplexVector u;
    double sigma = 0.0;
    ComplexVector v;
};

ComplexMatrix kronecker(const ComplexMatrix& a, const ComplexMatrix& b);

/// Column-wise Kronecker product. Throws DimensionError on column-count mismatch.
ComplexMatrix khatri_rao(const ComplexMatrix& a, const ComplexMatrix& b);

/// Throws DegenerateInputError if any entry of `b` is zero.
ComplexMatrix elementwise_divide(const ComplexMatrix& a, const ComplexMatrix& b);

/// Mode-n unfolding (mode in {1,2,3}).
///
///   [T]_(1) : I1 x I2*I3, column i2 + I2*i3
///   [T]_(2) : I2 x I1*I3, column i1 + I1*i3
///   [T]_(3) : I3 x I1*I2, column i1 + I1*i2
///
/// With these orders the unfoldings of T = G x1 A x2 B x3 C read
/// A [G]_(1) (C kron B)^T, B [G]_(2) (C kron A)^T and C [G]_(3) (B kron A)^T.
ComplexMatrix unfold(const ComplexTensor3& t, int mode);

/// Inverse of unfold().
ComplexTensor3 fold(const ComplexMatrix& m, int mode, const ComplexTensor3::Dims& dims);

/// T x_n M, i.e. unfold(result, n) == M * unfold(T, n).
ComplexTensor3 mode_product(const ComplexTensor3& t, const ComplexMatrix& m, int mode);

/// Thin SVD with singular values in descending order.
SvdFactors svd(const ComplexMatrix& m);

/// Moore-Penrose pseudoinverse; singular values below tol * sigma_max are dropped.
ComplexMatrix pseudoinverse(const ComplexMatrix& m, double tol = kDefaultPinvTol);

/// Leading singular triple. Throws DegenerateInputError for a zero matrix.
Rank1Factor dominant_rank1(const ComplexMatrix& m);

/// Column-stacking vectorization: vec(M)[i + rows*j] = M(i, j).
ComplexVector vec(const ComplexMatrix& m);
ComplexMatrix unvec(const ComplexVector& v, Index rows, Index cols);

/// D(v): diagonal matrix built from a vector.
ComplexMatrix diag(const ComplexVector& v);

} // namespace ris

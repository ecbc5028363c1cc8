#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace openqfr {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Largest Hilbert-space dimension handled by the dense kernels.
inline constexpr int kMaxDim = 9;

namespace pauli {
ComplexMatrix identity(int n = 2);
ComplexMatrix x();
ComplexMatrix y();
ComplexMatrix z();
} // namespace pauli

/// Kronecker product, (A (x) B)[i*p + k, j*q + l] = A[i,j] * B[k,l].
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Row-stacking vectorization: vec(X)[i*n + j] = X[i,j].
/// With this convention vec(A X B) = (A (x) B^T) vec(X).
ComplexVector vectorize(const ComplexMatrix& m);

/// Inverse of vectorize. Throws DomainError if the length is not a perfect square.
ComplexMatrix devectorize(const ComplexVector& v);

/// exp(a * t) by scaling and squaring with a degree-13 Pade approximant.
/// Throws DomainError for non-square input or dimension above kMaxDim^2.
ComplexMatrix matrix_exp(const ComplexMatrix& a, double t = 1.0);

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
double hermiticity_error(const ComplexMatrix& m);
bool all_finite(const ComplexMatrix& m);

/// Ascending eigenvalues of a Hermitian matrix.
RealVector hermitian_eigenvalues(const ComplexMatrix& m);

/// Eigen-decomposition of a Hermitian matrix; columns of vectors are orthonormal,
/// values ascending.
struct HermitianEigensystem {
    RealVector values;
    ComplexMatrix vectors;
};
HermitianEigensystem hermitian_eigensystem(const ComplexMatrix& m);

/// Hermitian, unit-trace, positive semidefinite operator.
class DensityMatrix {
public:
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kTraceTol = 1e-9;
    static constexpr double kPositivityTol = 1e-9;

    /// Validates the invariants; throws DomainError on violation.
    explicit DensityMatrix(ComplexMatrix m);

    /// |psi><psi| for a (not necessarily normalized) state vector.
    static DensityMatrix pure(const ComplexVector& psi);
    /// |k><k| in dimension n.
    static DensityMatrix basis(int n, int k);
    static DensityMatrix maximally_mixed(int n);

    int dim() const { return static_cast<int>(m_.rows()); }
    const ComplexMatrix& matrix() const { return m_; }
    double population(int k) const { return m_(k, k).real(); }
    /// <v| rho |v> for a normalized vector v.
    double expectation(const ComplexVector& v) const;

private:
    ComplexMatrix m_;
};

/// n^2 x n^2 map acting on row-stacked vectorized operators.
struct SuperOperator {
    int dim = 0;
    ComplexMatrix matrix;

    SuperOperator() = default;
    SuperOperator(int n, ComplexMatrix m);

    static SuperOperator identity(int n);

    ComplexMatrix apply(const ComplexMatrix& rho) const;
    SuperOperator operator*(const SuperOperator& rhs) const;
    SuperOperator pow(int k) const;
};

} // namespace openqfr

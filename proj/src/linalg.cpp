#include "openqfr/linalg.hpp"

#include <array>
#include <cmath>
#include <string>

#include "openqfr/errors.hpp"

namespace openqfr {

namespace pauli {

ComplexMatrix identity(int n) { return ComplexMatrix::Identity(n, n); }

ComplexMatrix x() {
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

ComplexMatrix y() {
    const Complex i{0.0, 1.0};
    ComplexMatrix m(2, 2);
    m << 0.0, -i, i, 0.0;
    return m;
}

ComplexMatrix z() {
    ComplexMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

} // namespace pauli

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    const Eigen::Index p = b.rows();
    const Eigen::Index q = b.cols();
    ComplexMatrix out(a.rows() * p, a.cols() * q);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * p, j * q, p, q) = a(i, j) * b;
    return out;
}

ComplexVector vectorize(const ComplexMatrix& m) {
    ComplexVector v(m.size());
    const Eigen::Index cols = m.cols();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            v(i * cols + j) = m(i, j);
    return v;
}

ComplexMatrix devectorize(const ComplexVector& v) {
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (n * n != v.size())
        throw DomainError("devectorize: length " + std::to_string(v.size()) +
                          " is not a perfect square");
    ComplexMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = v(i * n + j);
    return m;
}

namespace {

// Pade coefficients and 1-norm thresholds from Higham (2005).
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068;
constexpr double kTheta13 = 5.371920351148152;

double norm1(const ComplexMatrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

// Low-degree approximants: U = A * sum_odd b_k A^(k-1), V = sum_even b_k A^k.
template <std::size_t N>
void pade_low(const ComplexMatrix& a, const std::array<double, N>& b, ComplexMatrix& u,
              ComplexMatrix& v) {
    const Eigen::Index n = a.rows();
    const ComplexMatrix a2 = a * a;
    ComplexMatrix power = ComplexMatrix::Identity(n, n);
    ComplexMatrix odd = b[1] * power;
    ComplexMatrix even = b[0] * power;
    for (std::size_t k = 2; k + 1 < N; k += 2) {
        power = power * a2;
        even += b[k] * power;
        odd += b[k + 1] * power;
    }
    u = a * odd;
    v = even;
}

void pade13(const ComplexMatrix& a, ComplexMatrix& u, ComplexMatrix& v) {
    const auto& b = kPade13;
    const Eigen::Index n = a.rows();
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    const ComplexMatrix a2 = a * a;
    const ComplexMatrix a4 = a2 * a2;
    const ComplexMatrix a6 = a4 * a2;
    const ComplexMatrix inner_u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
                                  b[5] * a4 + b[3] * a2 + b[1] * id;
    u = a * inner_u;
    v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
        b[0] * id;
}

} // namespace

ComplexMatrix matrix_exp(const ComplexMatrix& a_in, double t) {
    if (a_in.rows() != a_in.cols())
        throw DomainError("matrix_exp: matrix is " + std::to_string(a_in.rows()) + "x" +
                          std::to_string(a_in.cols()) + ", expected square");
    if (a_in.rows() > kMaxDim * kMaxDim)
        throw DomainError("matrix_exp: dimension " + std::to_string(a_in.rows()) +
                          " exceeds " + std::to_string(kMaxDim * kMaxDim));
    const Eigen::Index n = a_in.rows();
    if (n == 0) return a_in;

    ComplexMatrix a = a_in * t;
    const double norm = norm1(a);
    ComplexMatrix u, v;
    int squarings = 0;
    if (norm <= kTheta3) {
        pade_low(a, kPade3, u, v);
    } else if (norm <= kTheta5) {
        pade_low(a, kPade5, u, v);
    } else if (norm <= kTheta7) {
        pade_low(a, kPade7, u, v);
    } else if (norm <= kTheta9) {
        pade_low(a, kPade9, u, v);
    } else {
        if (norm > kTheta13) {
            squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta13))));
            a /= std::ldexp(1.0, squarings);
        }
        pade13(a, u, v);
    }
    ComplexMatrix result = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) result = result * result;
    return result;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

double hermiticity_error(const ComplexMatrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool all_finite(const ComplexMatrix& m) { return m.allFinite(); }

RealVector hermitian_eigenvalues(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

HermitianEigensystem hermitian_eigensystem(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
    return {solver.eigenvalues(), solver.eigenvectors()};
}

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1 || m_.rows() > kMaxDim)
        throw DomainError("density matrix must be square with dimension in [1, 9]");
    if (!m_.allFinite()) throw DomainError("density matrix has non-finite entries");
    const double herm = hermiticity_error(m_);
    if (herm > kHermitianTol)
        throw DomainError("density matrix is not Hermitian (error " + std::to_string(herm) + ")");
    const double trace = m_.trace().real();
    if (std::abs(trace - 1.0) > kTraceTol)
        throw DomainError("density matrix trace is " + std::to_string(trace));
    const double min_eig = hermitian_eigenvalues(m_).minCoeff();
    if (min_eig < -kPositivityTol)
        throw DomainError("density matrix has negative eigenvalue " + std::to_string(min_eig));
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi) {
    const ComplexVector unit = psi / psi.norm();
    ComplexMatrix m = unit * unit.adjoint();
    // Exact Hermitian symmetry; the outer product is only symmetric to rounding.
    m = 0.5 * (m + m.adjoint()).eval();
    return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::basis(int n, int k) {
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    m(k, k) = 1.0;
    return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int n) {
    return DensityMatrix(ComplexMatrix::Identity(n, n) / static_cast<double>(n));
}

double DensityMatrix::expectation(const ComplexVector& v) const {
    return (v.adjoint() * m_ * v)(0, 0).real();
}

SuperOperator::SuperOperator(int n, ComplexMatrix m) : dim(n), matrix(std::move(m)) {
    if (matrix.rows() != n * n || matrix.cols() != n * n)
        throw DomainError("superoperator must be n^2 x n^2");
}

SuperOperator SuperOperator::identity(int n) {
    return SuperOperator(n, ComplexMatrix::Identity(n * n, n * n));
}

ComplexMatrix SuperOperator::apply(const ComplexMatrix& rho) const {
    return devectorize(matrix * vectorize(rho));
}

SuperOperator SuperOperator::operator*(const SuperOperator& rhs) const {
    return SuperOperator(dim, matrix * rhs.matrix);
}

SuperOperator SuperOperator::pow(int k) const {
    if (k < 0) throw DomainError("superoperator power must be non-negative");
    SuperOperator result = identity(dim);
    SuperOperator base = *this;
    while (k > 0) {
        if (k & 1) result = result * base;
        base = base * base;
        k >>= 1;
    }
    return result;
}

} // namespace openqfr

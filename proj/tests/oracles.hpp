#pragma once
// Independent reference computations used only by the tests.

#include <cmath>
#include <random>

#include "openqfr/linalg.hpp"

namespace oracle {

using openqfr::Complex;
using openqfr::ComplexMatrix;

inline ComplexMatrix random_matrix(std::mt19937_64& gen, int rows, int cols, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    ComplexMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = Complex(n(gen), n(gen));
    return m;
}

inline ComplexMatrix random_hermitian(std::mt19937_64& gen, int n, double scale = 1.0) {
    const ComplexMatrix a = random_matrix(gen, n, n, scale);
    return 0.5 * (a + a.adjoint());
}

/// rho = A A^dag / Tr, full rank with probability one.
inline ComplexMatrix random_density(std::mt19937_64& gen, int n) {
    const ComplexMatrix a = random_matrix(gen, n, n);
    ComplexMatrix rho = a * a.adjoint();
    rho /= rho.trace();
    return 0.5 * (rho + rho.adjoint());
}

/// exp(A) by Taylor series on A / 2^s, then s squarings; terms until they stop changing.
inline ComplexMatrix taylor_exp(const ComplexMatrix& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    while (norm / std::ldexp(1.0, s) > 0.05) ++s;
    const ComplexMatrix b = a / std::ldexp(1.0, s);
    ComplexMatrix term = ComplexMatrix::Identity(a.rows(), a.cols());
    ComplexMatrix sum = term;
    for (int k = 1; k < 60; ++k) {
        term = (term * b) / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-300) break;
    }
    for (int k = 0; k < s; ++k) sum = sum * sum;
    return sum;
}

/// Direct GKSL right-hand side on a matrix.
inline ComplexMatrix lindblad_rhs(const ComplexMatrix& h, const std::vector<ComplexMatrix>& jumps,
                                  const ComplexMatrix& rho) {
    const Complex i{0.0, 1.0};
    ComplexMatrix out = -i * (h * rho - rho * h);
    for (const auto& l : jumps) {
        const ComplexMatrix ldl = l.adjoint() * l;
        out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
    }
    return out;
}

} // namespace oracle

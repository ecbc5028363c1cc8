#include <doctest.h>

#include "openqfr/errors.hpp"
#include "openqfr/linalg.hpp"
#include "oracles.hpp"

using namespace openqfr;

TEST_CASE("kron matches the index formula") {
    std::mt19937_64 gen(1);
    const ComplexMatrix a = oracle::random_matrix(gen, 2, 3);
    const ComplexMatrix b = oracle::random_matrix(gen, 3, 2);
    const ComplexMatrix k = kron(a, b);
    REQUIRE(k.rows() == 6);
    REQUIRE(k.cols() == 6);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            for (int p = 0; p < 3; ++p)
                for (int q = 0; q < 2; ++q) CHECK(k(i * 3 + p, j * 2 + q) == a(i, j) * b(p, q));
}

TEST_CASE("kron of the identities is the identity") {
    CHECK(max_abs_diff(kron(pauli::identity(2), pauli::identity(3)), pauli::identity(6)) == 0.0);
}

TEST_CASE("vectorize is row stacking and round-trips") {
    ComplexMatrix m(2, 2);
    m << 1.0, 2.0, 3.0, 4.0;
    const ComplexVector v = vectorize(m);
    CHECK(v(0) == Complex(1.0));
    CHECK(v(1) == Complex(2.0));
    CHECK(v(2) == Complex(3.0));
    CHECK(devectorize(v) == m);
}

TEST_CASE("vec(A X B) = (A kron B^T) vec(X)") {
    std::mt19937_64 gen(2);
    for (int n : {2, 3, 7}) {
        const ComplexMatrix a = oracle::random_matrix(gen, n, n);
        const ComplexMatrix x = oracle::random_matrix(gen, n, n);
        const ComplexMatrix b = oracle::random_matrix(gen, n, n);
        const ComplexVector lhs = vectorize(a * x * b);
        const ComplexVector rhs = kron(a, b.transpose()) * vectorize(x);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("devectorize rejects non-square lengths") {
    CHECK_THROWS_AS(devectorize(ComplexVector::Zero(5)), DomainError);
}

TEST_CASE("matrix_exp agrees with a Taylor oracle across norms") {
    std::mt19937_64 gen(3);
    for (int n : {1, 2, 3, 7, 9}) {
        for (double scale : {1e-3, 0.3, 2.0, 15.0}) {
            const ComplexMatrix a = oracle::random_matrix(gen, n, n, scale);
            const ComplexMatrix ref = oracle::taylor_exp(a);
            const double rel = max_abs_diff(matrix_exp(a), ref) / std::max(1.0, ref.cwiseAbs().maxCoeff());
            CAPTURE(n);
            CAPTURE(scale);
            CHECK(rel < 1e-11);
        }
    }
}

TEST_CASE("matrix_exp closed forms") {
    CHECK(max_abs_diff(matrix_exp(ComplexMatrix::Zero(4, 4)), pauli::identity(4)) == 0.0);
    // exp(-i theta sigma_x / 2) = cos(theta/2) I - i sin(theta/2) sigma_x
    const double th = 1.234;
    const ComplexMatrix u = matrix_exp(Complex(0, -0.5) * pauli::x(), th);
    const ComplexMatrix ref = std::cos(th / 2) * pauli::identity() - Complex(0, 1) * std::sin(th / 2) * pauli::x();
    CHECK(max_abs_diff(u, ref) < 1e-14);
    // Diagonal input exponentiates entrywise.
    ComplexMatrix d = ComplexMatrix::Zero(3, 3);
    d.diagonal() << -40.0, 0.5, Complex(0, 3.0);
    const ComplexMatrix e = matrix_exp(d);
    CHECK(std::abs(e(0, 0) - std::exp(-40.0)) < 1e-28);
    CHECK(std::abs(e(2, 2) - std::exp(Complex(0, 3.0))) < 1e-14);
}

TEST_CASE("matrix_exp of a nilpotent block is a finite polynomial") {
    ComplexMatrix n = ComplexMatrix::Zero(3, 3);
    n(0, 1) = 2.0;
    n(1, 2) = 3.0;
    ComplexMatrix ref = pauli::identity(3) + n + 0.5 * n * n;
    CHECK(max_abs_diff(matrix_exp(n), ref) < 1e-14);
}

TEST_CASE("matrix_exp validates shape") {
    CHECK_THROWS_AS(matrix_exp(ComplexMatrix::Zero(2, 3)), DomainError);
    CHECK_THROWS_AS(matrix_exp(ComplexMatrix::Zero(82, 82)), DomainError);
}

TEST_CASE("Hermitian eigensystem residual and ordering") {
    std::mt19937_64 gen(4);
    const ComplexMatrix h = oracle::random_hermitian(gen, 7);
    const HermitianEigensystem eig = hermitian_eigensystem(h);
    CHECK(max_abs_diff(h * eig.vectors, eig.vectors * eig.values.cast<Complex>().asDiagonal()) < 1e-12);
    CHECK(max_abs_diff(eig.vectors.adjoint() * eig.vectors, pauli::identity(7)) < 1e-12);
    for (int k = 1; k < 7; ++k) CHECK(eig.values(k) >= eig.values(k - 1));
}

TEST_CASE("DensityMatrix enforces its invariants") {
    CHECK_NOTHROW(DensityMatrix::maximally_mixed(3));
    ComplexMatrix bad_trace = pauli::identity(2);
    CHECK_THROWS_AS(DensityMatrix{bad_trace}, DomainError);
    ComplexMatrix non_herm = 0.5 * pauli::identity(2);
    non_herm(0, 1) = 0.1;
    CHECK_THROWS_AS(DensityMatrix{non_herm}, DomainError);
    ComplexMatrix negative(2, 2);
    negative << 1.5, 0.0, 0.0, -0.5;
    CHECK_THROWS_AS(DensityMatrix{negative}, DomainError);
}

TEST_CASE("pure states normalize and give Born expectations") {
    ComplexVector psi(2);
    psi << 3.0, Complex(0, 4.0);
    const DensityMatrix rho = DensityMatrix::pure(psi);
    CHECK(rho.population(0) == doctest::Approx(9.0 / 25.0).epsilon(1e-14));
    ComplexVector e1(2);
    e1 << 0.0, 1.0;
    CHECK(rho.expectation(e1) == doctest::Approx(16.0 / 25.0).epsilon(1e-14));
    CHECK(DensityMatrix::basis(7, 6).population(6) == 1.0);
}

TEST_CASE("SuperOperator composition and powers") {
    std::mt19937_64 gen(5);
    const SuperOperator a(2, oracle::random_matrix(gen, 4, 4, 0.5));
    SuperOperator direct = SuperOperator::identity(2);
    for (int k = 0; k < 13; ++k) direct = direct * a;
    CHECK(max_abs_diff(a.pow(13).matrix, direct.matrix) < 1e-12 * std::max(1.0, direct.matrix.cwiseAbs().maxCoeff()));
    CHECK(max_abs_diff(a.pow(0).matrix, pauli::identity(4)) == 0.0);
    const ComplexMatrix x = oracle::random_matrix(gen, 2, 2);
    CHECK(max_abs_diff(a.apply(x), devectorize(a.matrix * vectorize(x))) == 0.0);
    CHECK_THROWS_AS(SuperOperator(2, ComplexMatrix::Zero(3, 3)), DomainError);
}

TEST_CASE("Pauli algebra") {
    const Complex i{0.0, 1.0};
    CHECK(max_abs_diff(pauli::x() * pauli::y(), i * pauli::z()) < 1e-15);
    CHECK(hermiticity_error(pauli::y()) == 0.0);
}

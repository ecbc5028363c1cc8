#include <doctest.h>

#include <cmath>

#include "openqfr/errors.hpp"
#include "openqfr/fluctuation.hpp"
#include "openqfr/three_level.hpp"

using namespace openqfr;
using namespace openqfr::three_level;

namespace {

ThreeLevelSystem study_system(double omega13) {
    ThreeLevelParams p;
    p.omega13 = omega13;
    return build_3ls(p);
}

// Plain bisection on the factorized form, scanning a fixed grid: shares no code
// with find_epsilon.
double grid_root(const std::function<double(double)>& g, double lo, double hi) {
    const int n = 4000;
    double prev_x = lo, prev = g(lo);
    for (int k = 1; k <= n; ++k) {
        const double x = lo + (hi - lo) * k / n;
        const double v = g(x);
        if ((prev < 0) != (v < 0)) {
            double a = prev_x, b = x, fa = prev;
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = g(m);
                if ((fm < 0) == (fa < 0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return 0.5 * (a + b);
        }
        prev_x = x;
        prev = v;
    }
    return NAN;
}

} // namespace

TEST_CASE("spectrum and eigenvectors") {
    const ThreeLevelSystem s = study_system(0.21);
    const double w = std::sqrt(1.0441);
    CHECK(s.energies(0) == doctest::Approx(-w).epsilon(1e-14));
    CHECK(std::abs(s.energies(1)) < 1e-14);
    CHECK(s.energies(2) == doctest::Approx(w).epsilon(1e-14));
    const ComplexMatrix& h = s.model.hamiltonian();
    CHECK(max_abs_diff(h * s.eigenvectors, s.eigenvectors * s.energies.cast<Complex>().asDiagonal()) <= 1e-12);
    const ThreeLevelSystem q = study_system(0.0);
    CHECK(q.energies(0) == doctest::Approx(-1.0));
    CHECK(q.energies(2) == doctest::Approx(1.0));
}

TEST_CASE("thermal initial state") {
    const ThreeLevelSystem s = study_system(0.21);
    const ThermalState mixed = initial_thermal_state(s, 0.0);
    for (int k = 0; k < 3; ++k) CHECK(mixed.populations(k) == doctest::Approx(1.0 / 3));
    const ThermalState th = initial_thermal_state(s);
    double z = 0.0;
    for (int k = 0; k < 3; ++k) z += std::exp(-s.energies(k));
    for (int k = 0; k < 3; ++k) CHECK(th.populations(k) == doctest::Approx(std::exp(-s.energies(k)) / z).epsilon(1e-14));
    CHECK(std::abs(th.rho.matrix().trace() - 1.0) < 1e-15);
    // rho commutes with H.
    const ComplexMatrix& h = s.model.hamiltonian();
    CHECK(max_abs_diff(h * th.rho.matrix(), th.rho.matrix() * h) < 1e-14);
}

TEST_CASE("conditionals: identity at t = 0, stochastic rows, steady rows at t = 80") {
    const ThreeLevelSystem s = study_system(0.21);
    CHECK(max_abs_diff(tpm_conditionals_3ls(s, 0.0).cast<Complex>(), pauli::identity(3)) < 1e-12);
    for (double t : {0.5, 3.0, 17.0, 80.0}) {
        const RealMatrix c = tpm_conditionals_3ls(s, t);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(c.row(i).sum() - 1.0) <= 1e-9);
    }
    for (double w : kReferenceOmega13) {
        const RealMatrix c = tpm_conditionals_3ls(study_system(w), 80.0);
        for (int i = 1; i < 3; ++i) CHECK((c.row(i) - c.row(0)).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("late-time conditionals equal the steady-state energy populations") {
    const ThreeLevelSystem s = study_system(0.91);
    const RealVector ss = steady_energy_populations(s);
    const RealMatrix c = tpm_conditionals_3ls(s, 80.0);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(c(0, j) - ss(j)) < 1e-8);
}

TEST_CASE("factorized and double-sum g agree at steady state") {
    for (double w : kReferenceOmega13) {
        const ThreeLevelSystem s = study_system(w);
        const RealVector p0 = initial_thermal_state(s).populations;
        const RealMatrix c = tpm_conditionals_3ls(s, 80.0);
        const RealVector pt = c.row(0).transpose();
        double row_err = 0.0;
        for (int i = 1; i < 3; ++i) row_err = std::max(row_err, (c.row(i) - c.row(0)).cwiseAbs().maxCoeff());
        // The two forms differ by at most 3 * row_err * max_ij e^{eta (E_i - E_j)}.
        for (double eta : {-1.0, 0.3, 0.9, 2.0}) {
            const double bound = 3 * row_err * std::exp(std::abs(eta) * 2 * s.energies(2)) + 1e-12;
            CHECK(std::abs(g_of_eta(s.energies, p0, c, eta) - g_of_eta_factorized(s.energies, p0, pt, eta)) <= bound);
        }
        // Exactly equal rows: the identity holds to round-off.
        RealMatrix exact(3, 3);
        for (int i = 0; i < 3; ++i) exact.row(i) = pt.transpose();
        for (double eta : {-1.0, 0.3, 0.9, 2.0})
            CHECK(g_of_eta(s.energies, p0, exact, eta) == doctest::Approx(g_of_eta_factorized(s.energies, p0, pt, eta)).epsilon(1e-12));
        CHECK(std::abs(g_of_eta(s.energies, p0, c, 0.0)) <= 1e-12);
    }
}

TEST_CASE("surface property: two zeros of g on [0, 1.1] across coupling ratios") {
    std::vector<double> eta(300);
    for (int k = 0; k < 300; ++k) eta[k] = 1.1 * k / 299.0;
    for (int m = 1; m <= 30; ++m) {
        const ThreeLevelSystem s = study_system(0.1 * m);
        const RealVector p0 = initial_thermal_state(s).populations;
        const RealMatrix c = tpm_conditionals_3ls(s, 80.0);
        std::vector<double> g;
        for (double e : eta) g.push_back(g_of_eta(s.energies, p0, c, e));
        CAPTURE(0.1 * m);
        CHECK(count_zeros(g, 1e-12) == 2);
    }
}

TEST_CASE("count_zeros") {
    CHECK(count_zeros({0.0, -1.0, -0.5, 0.2, 0.3}) == 2);
    CHECK(count_zeros({1.0, 2.0}) == 0);
    CHECK(count_zeros({0.0, 0.0}) == 2);
    CHECK(count_zeros({1e-16, -1.0, 1.0}) == 2);
    CHECK(count_zeros({1e-16, -1.0, 1.0}, 1e-12) == 2);
    CHECK(count_zeros({-1e-16, -1.0, 1.0}) == 1);
    CHECK(count_zeros({-1e-16, -1.0, 1.0}, 1e-12) == 2);
}

TEST_CASE("epsilon trace settles and matches an independent root search") {
    const ThreeLevelSystem s = study_system(0.21);
    const RealVector p0 = initial_thermal_state(s).populations;
    const EpsilonTrace tr = epsilon_trace(s, p0, default_time_grid());
    REQUIRE(tr.epsilon.back().has_value());
    CHECK(tr.settled_from >= 0);
    CHECK(tr.note.front() == "degenerate");
    const RealVector pt = tpm_conditionals_3ls(s, 80.0).row(0).transpose();
    const double ref = grid_root([&](double e) { return g_of_eta_factorized(s.energies, p0, pt, e); }, 0.05, 5.0);
    CHECK(std::abs(*tr.epsilon.back() - ref) <= 1e-6);
}

TEST_CASE("converged epsilon is fixed by the initial and final populations") {
    const ThreeLevelSystem s = study_system(0.41);
    const RealVector pt = tpm_conditionals_3ls(s, 80.0).row(0).transpose();
    for (double beta : {0.5, 1.0}) {
        const RealVector p0 = initial_thermal_state(s, beta).populations;
        RealMatrix cond(3, 3);
        for (int i = 0; i < 3; ++i) cond.row(i) = pt.transpose();
        const EpsilonResult r = find_epsilon([&](double e) { return g_of_eta(s.energies, p0, cond, e) + 1.0; });
        const double ref = grid_root([&](double e) { return g_of_eta_factorized(s.energies, p0, pt, e); }, 0.05, 5.0);
        CAPTURE(beta);
        CHECK(std::abs(r.epsilon - ref) <= 1e-7);
    }
}

TEST_CASE("five distinct plateaus") {
    std::vector<double> plateaus;
    std::vector<double> grid;
    for (int k = 120; k <= 160; ++k) grid.push_back(0.5 * k);
    for (double w : kReferenceOmega13) {
        const ThreeLevelSystem s = study_system(w);
        const EpsilonTrace tr = epsilon_trace(s, initial_thermal_state(s).populations, grid);
        REQUIRE(tr.epsilon.back().has_value());
        plateaus.push_back(*tr.epsilon.back());
    }
    // The two largest couplings sit near the minimum of epsilon(omega13) and differ
    // by about 7e-4, still far above the 1e-7 root precision.
    for (std::size_t a = 0; a < plateaus.size(); ++a)
        for (std::size_t b = a + 1; b < plateaus.size(); ++b)
            CHECK(std::abs(plateaus[a] - plateaus[b]) > 1e-4);
}

TEST_CASE("parameter validation") {
    ThreeLevelParams p;
    p.gamma = 0.0;
    CHECK_THROWS_AS(build_3ls(p), DomainError);
    const ThreeLevelSystem s = study_system(0.21);
    CHECK_THROWS_AS(tpm_conditionals_3ls(s, -1.0), DomainError);
    CHECK_THROWS_AS(epsilon_trace(s, initial_thermal_state(s).populations, {1.0, 0.5}), DomainError);
    CHECK_THROWS_AS(epsilon_trace(s, initial_thermal_state(s).populations, {81.0}), DomainError);
}

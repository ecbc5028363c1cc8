#include <doctest.h>

#include <cmath>
#include <numbers>

#include "openqfr/errors.hpp"
#include "openqfr/nv_model.hpp"

using namespace openqfr;
using namespace openqfr::nv;
constexpr double kPi = std::numbers::pi;

namespace {

PulsedProtocol7 comparison_protocol() {
    const double rabi = 2 * kPi * 1.3;
    const QubitHamiltonian h = QubitHamiltonian::from_drive(-rabi, rabi);
    return {h, 2 * kPi / h.omega, 0.041, 20, true};
}

ProtocolConfig two_level_base(const PulsedProtocol7& p, const NvRates& r) {
    ProtocolConfig cfg;
    cfg.hamiltonian = p.hamiltonian;
    cfg.tau = p.tau;
    cfg.n_pulses = p.n_pulses;
    cfg.p_diss = 0.44;
    cfg.readout_flip = std::pow(std::tan(r.theta), 2);
    return cfg;
}

} // namespace

TEST_CASE("decay out of each excited level equals the printed column sums") {
    const NvRates r;
    const LindbladModel m = build_seven_level_model(r, false);
    ComplexMatrix total = ComplexMatrix::Zero(kNvDim, kNvDim);
    for (const auto& l : m.jump_operators()) total += l.adjoint() * l;
    const double flip = std::pow(std::tan(r.theta), 2) * r.gamma_eg;
    CHECK(total(index(NvLevel::E0), index(NvLevel::E0)).real() ==
          doctest::Approx(r.gamma_eg + flip + r.gamma_0m).epsilon(1e-14));
    CHECK(total(index(NvLevel::EPlus), index(NvLevel::EPlus)).real() ==
          doctest::Approx(r.gamma_eg + flip + r.gamma_1m).epsilon(1e-14));
    CHECK(total(index(NvLevel::M), index(NvLevel::M)).real() == doctest::Approx(r.gamma_m0).epsilon(1e-14));
    // Distinct routes do not interfere: L^dag L summed is diagonal.
    CHECK((total - ComplexMatrix(total.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laser off leaves only decays; the aggregated operator interferes") {
    const NvRates r;
    CHECK(seven_level_hamiltonian(r, false).cwiseAbs().maxCoeff() == 0.0);
    const ComplexMatrix h = seven_level_hamiltonian(r, true);
    CHECK(hermiticity_error(h) == 0.0);
    CHECK(h(index(NvLevel::G0), index(NvLevel::E0)).real() == doctest::Approx(0.45 * 77.0));
    const ComplexMatrix agg = aggregated_jump_operator(r);
    const ComplexMatrix ldl = agg.adjoint() * agg;
    CHECK(std::abs(ldl(index(NvLevel::EPlus), index(NvLevel::EMinus))) > 0.0);
    CHECK(build_seven_level_model(r, true, JumpMode::Aggregated).jump_operators().size() == 1);
}

TEST_CASE("Gamma_m1 routes appear only when enabled") {
    NvRates r;
    const auto n0 = decay_routes(r).size();
    r.gamma_m1 = 1.0;
    CHECK(decay_routes(r).size() == n0 + 2);
}

TEST_CASE("p_diss from rates") {
    CHECK(std::abs(p_diss_from_rates(NvRates{}) - 0.44) <= 0.005);
    CHECK(p_diss_from_rates(NvRates{}) == doctest::Approx(60.4 / 137.4));
}

TEST_CASE("PL from the metastable state starts at zero") {
    const NvRates r;
    const auto pl = simulate_pl(r, DensityMatrix::basis(kNvDim, index(NvLevel::M)), {0.0, 0.1});
    CHECK(pl[0] == 0.0);
    CHECK(pl[1] > 0.0);
}

TEST_CASE("PL spin contrast and common steady value") {
    const NvRates r;
    std::vector<double> grid;
    for (int k = 0; k <= 100; ++k) grid.push_back(0.02 * k);
    grid.push_back(20.0);
    const auto g0 = simulate_pl(r, DensityMatrix::basis(kNvDim, index(NvLevel::G0)), grid);
    const auto g1 = simulate_pl(r, DensityMatrix::basis(kNvDim, index(NvLevel::GPlus)), grid);
    // Contrast lives in the first half microsecond; afterwards both sit at the steady value.
    double area0 = 0.0, area1 = 0.0;
    for (int k = 0; k <= 25; ++k) {
        area0 += g0[k];
        area1 += g1[k];
        CHECK(g0[k] >= g1[k]);
    }
    CHECK(area0 > 1.2 * area1);
    const double ss = radiative_rate(r, steady_state(build_seven_level_model(r, true)));
    CHECK(std::abs(g0.back() - g1.back()) <= 1e-6 * ss);
    CHECK(std::abs(g0.back() - ss) <= 1e-6 * ss);
    CHECK_THROWS_AS(simulate_pl(r, DensityMatrix::basis(kNvDim, 0), {0.0, 0.0}), DomainError);
}

TEST_CASE("seven-level propagation keeps trace and positivity over 10 us") {
    const NvRates r;
    const LindbladModel m = build_seven_level_model(r, true);
    const Propagator step(m, 0.25);
    DensityMatrix rho = DensityMatrix::basis(kNvDim, index(NvLevel::GPlus));
    for (int k = 0; k < 40; ++k) {
        rho = step.apply(rho);
        CHECK(std::abs(rho.matrix().trace() - 1.0) <= 1e-9);
        CHECK(hermitian_eigenvalues(rho.matrix()).minCoeff() >= -1e-8);
    }
}

TEST_CASE("without shelving or spin flips a pulse is a sigma_z measurement on the ground qubit") {
    NvRates r;
    r.theta = 0.0;
    r.gamma_0m = 0.0;
    r.gamma_1m = 0.0;
    const LindbladModel m = build_seven_level_model(r, true);
    ComplexVector psi = embed_ground_state(QubitState(std::sqrt(0.3), std::sqrt(0.7)));
    const DensityMatrix rho = propagate(m, DensityMatrix::pure(psi), 2.0);
    const int g0 = index(NvLevel::G0), gp = index(NvLevel::GPlus);
    const double pop0 = rho.population(g0) + rho.population(index(NvLevel::E0));
    const double pop1 = rho.population(gp) + rho.population(index(NvLevel::EPlus));
    CHECK(std::abs(pop0 - 0.3) <= 1e-6);
    CHECK(std::abs(pop1 - 0.7) <= 1e-6);
    CHECK(std::abs(rho.matrix()(g0, gp)) < 1e-3);
}

TEST_CASE("no laser time reduces to pure microwave evolution") {
    const NvRates r;
    PulsedProtocol7 p = comparison_protocol();
    p.t_l = 0.0;
    p.tau = 0.1;
    const QubitHamiltonian& h = p.hamiltonian;
    const DensityMatrix rho0 = DensityMatrix::pure(embed_ground_state(h.down()));
    const DensityMatrix out = evolve_pulsed(r, p, rho0, 3);
    const QubitState ref = h.evolution(0.3) * h.down();
    const ComplexVector v = embed_ground_state(ref);
    CHECK(out.expectation(v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("laser with no microwave relaxes to the optical steady state") {
    const NvRates r;
    PulsedProtocol7 p = comparison_protocol();
    p.microwave_on = false;
    p.t_l = 1.0;
    p.tau = 1e-6;
    const DensityMatrix rho = evolve_pulsed(r, p, DensityMatrix::basis(kNvDim, index(NvLevel::GPlus)), 40);
    // Dark windows are negligible, so the state approaches the laser-on steady state.
    const DensityMatrix ss = steady_state(build_seven_level_model(r, true));
    CHECK(max_abs_diff(rho.matrix(), ss.matrix()) < 1e-4);
}

TEST_CASE("fitting a two-level curve against itself recovers its p_abs") {
    const NvRates r;
    const PulsedProtocol7 p = comparison_protocol();
    const ProtocolConfig base = two_level_base(p, r);
    auto family = [&](double x) { return two_level_curves(base, x); };
    for (double target : {0.33, 0.71}) {
        const EffectiveFit f = fit_effective_p_abs(family(target), family);
        CHECK(std::abs(f.p_abs - target) <= 1e-3);
        CHECK(f.distance < 1e-4);
        CHECK_FALSE(f.boundary);
    }
}

TEST_CASE("effective p_abs at p_abs_optical = 0.45 and monotone trend") {
    const PulsedProtocol7 p = comparison_protocol();
    std::vector<double> fits;
    for (double po : {0.2, 0.3, 0.45}) {
        NvRates r;
        r.p_abs_optical = po;
        const ProtocolConfig base = two_level_base(p, r);
        auto family = [&](double x) { return two_level_curves(base, x); };
        const EffectiveFit f = fit_effective_p_abs(simulate_pulsed_protocol_7l(r, p), family);
        fits.push_back(f.p_abs);
        if (po == 0.45) {
            CHECK(std::abs(f.p_abs - 0.69) <= 0.05);
            CHECK(f.distance <= 0.05);
        }
    }
    CHECK(fits[0] < fits[1]);
    CHECK(fits[1] < fits[2]);
}

TEST_CASE("rate validation") {
    NvRates r;
    r.theta = 2.0;
    CHECK_THROWS_AS(r.validate(), DomainError);
    r = NvRates{};
    r.gamma_eg = 0.0;
    CHECK_THROWS_AS(r.validate(), DomainError);
}

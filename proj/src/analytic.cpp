#include "openqfr/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "openqfr/errors.hpp"
#include "openqfr/lindblad.hpp"

namespace openqfr::analytic {

void AnalyticParams::validate() const {
    if (!(gamma_d_tl >= 0.0)) throw DomainError("gamma_d_tl must be non-negative");
    if (n < 1) throw DomainError("pulse count n must be at least 1");
    if (!(omega > 0.0)) throw DomainError("omega must be positive");
}

double mu(double alpha, double omega, double tau) {
    const double s = std::sin(alpha) * std::sin(0.5 * omega * tau);
    return 1.0 - 2.0 * s * s;
}

double gamma_d_tl_from_p_diss(double p_diss) {
    if (!(p_diss >= 0.0 && p_diss < 1.0))
        throw DomainError("p_diss must lie in [0, 1) to map onto a finite damping");
    return -std::log1p(-p_diss);
}

SuperOperator measurement_superop() {
    return SuperOperator(2, 0.5 * (pauli::identity(4) + kron(pauli::z(), pauli::z())));
}

SuperOperator population_swap_superop() {
    return SuperOperator(2, 0.5 * (kron(pauli::x(), pauli::x()) - kron(pauli::y(), pauli::y())));
}

SuperOperator unitary_superop(const QubitHamiltonian& h, double t) {
    const ComplexMatrix hm = h.matrix();
    const ComplexMatrix id = pauli::identity(2);
    const ComplexMatrix h_super = kron(hm, id) - kron(id, hm.conjugate());
    return SuperOperator(2, matrix_exp(Complex{0.0, -1.0} * h_super, t));
}

SuperOperator dissipation_superop(double gamma_d_tl) {
    ComplexMatrix jump = ComplexMatrix::Zero(2, 2);
    jump(0, 1) = std::sqrt(gamma_d_tl);
    const LindbladModel model(ComplexMatrix::Zero(2, 2), {jump});
    return Propagator(model, 1.0).superoperator();
}

ComplexVector vectorized_eigenprojector(const QubitHamiltonian& h, Energy e) {
    const QubitState v = h.eigenstate(e);
    return vectorize(v * v.adjoint());
}

SuperOperator composed_superop_closed_form(const AnalyticParams& p) {
    p.validate();
    if (p.gamma_d_tl != 0.0)
        throw DomainError("closed-form S requires gamma_d_tl = 0; use the dissipative form");
    const double mun = std::pow(mu(p.alpha, p.omega, p.tau), p.n);
    return SuperOperator(2, 0.5 * ((1.0 + mun) * measurement_superop().matrix +
                                   (1.0 - mun) * population_swap_superop().matrix));
}

SuperOperator composed_superop_direct(const AnalyticParams& p) {
    p.validate();
    const SuperOperator m = measurement_superop();
    const SuperOperator step = m * unitary_superop(p.hamiltonian(), p.tau) * m;
    SuperOperator s = SuperOperator::identity(2);
    for (int k = 0; k < p.n; ++k) s = step * s;
    return s;
}

SuperOperator dissipative_superop_direct(const AnalyticParams& p) {
    p.validate();
    const SuperOperator m = measurement_superop();
    const SuperOperator half = dissipation_superop(0.5 * p.gamma_d_tl);
    const SuperOperator u = unitary_superop(p.hamiltonian(), p.tau);
    const SuperOperator step = m * half * u * half * m;
    SuperOperator s = half * m;
    for (int k = 1; k < p.n; ++k) s = step * s;
    return m * half * s;
}

double conditional_prob_closed_form(const AnalyticParams& p, Energy initial, Energy final) {
    p.validate();
    const double m = mu(p.alpha, p.omega, p.tau);
    const double decay = std::exp(-p.gamma_d_tl);
    const double decay_n = std::exp(-p.n * p.gamma_d_tl);
    const double mun = std::pow(m, p.n);
    const double mun1 = std::pow(m, p.n - 1);
    const double denom = 1.0 - m * decay;
    // denom = 0 only when mu = 1 and gamma = 0, where R_n vanishes identically.
    const double r_n = denom == 0.0 ? 0.0 : (1.0 - decay) / denom * (1.0 - mun * decay_n);
    const double c = std::cos(p.alpha);
    const double value =
        0.5 * (1.0 + sign(final) * c * (r_n + sign(initial) * mun1 * decay_n * c));
    constexpr double kSlack = 1e-12;
    if (!(value >= -kSlack && value <= 1.0 + kSlack))
        throw NumericalError("conditional probability " + std::to_string(value) +
                             " outside [0, 1]");
    return std::clamp(value, 0.0, 1.0);
}

double conditional_prob_direct(const AnalyticParams& p, Energy initial, Energy final) {
    const SuperOperator s = dissipative_superop_direct(p);
    const QubitHamiltonian h = p.hamiltonian();
    const ComplexVector vi = vectorized_eigenprojector(h, initial);
    const ComplexVector vj = vectorized_eigenprojector(h, final);
    return (vj.adjoint() * s.matrix * vi)(0, 0).real();
}

namespace {

void check_asymptote_domain(double alpha, double mu_value, double gamma_d_tl) {
    const double s = std::sin(alpha);
    if (std::abs(s) < 1e-14)
        throw DomainError("alpha in {0, pi}: measurements commute with H and leave the "
                          "energy populations frozen after the first measurement");
    if (gamma_d_tl == 0.0 && std::abs(1.0 - mu_value) < 1e-14)
        throw DomainError("mu = 1 without dissipation: free evolution is the identity and "
                          "only the first measurement acts");
    if (!(gamma_d_tl >= 0.0)) throw DomainError("gamma_d_tl must be non-negative");
}

} // namespace

double asymptotic_p_up(double alpha, double mu_value, double gamma_d_tl) {
    check_asymptote_domain(alpha, mu_value, gamma_d_tl);
    const double decay = std::exp(-gamma_d_tl);
    return 0.5 * (1.0 + (1.0 - decay) * std::cos(alpha) / (1.0 - decay * mu_value));
}

double asymptotic_p_up_printed(double alpha, double mu_value, double gamma_d_tl) {
    check_asymptote_domain(alpha, mu_value, gamma_d_tl);
    const double decay = std::exp(-gamma_d_tl);
    return 0.5 * (1.0 - (1.0 - decay) * std::cos(alpha) / (1.0 - decay * mu_value));
}

std::vector<double> gap_distribution(double p_abs, int n) {
    if (!(p_abs > 0.0 && p_abs <= 1.0))
        throw DomainError("p_abs must lie in (0, 1]; no absorptions leaves mu_eff undefined");
    if (n < 1) throw DomainError("pulse count must be at least 1");
    std::vector<double> f(static_cast<std::size_t>(n));
    double weight = p_abs;
    double total = 0.0;
    for (int l = 0; l < n; ++l) {
        f[l] = weight;
        total += weight;
        weight *= 1.0 - p_abs;
    }
    for (double& v : f) v /= total;
    return f;
}

double effective_mu(double p_abs, int n, double alpha, double omega, double tau) {
    const std::vector<double> f = gap_distribution(p_abs, n);
    double acc = 0.0;
    for (int l = 1; l <= n; ++l) acc += f[l - 1] * mu(alpha, omega, l * tau);
    return acc;
}

} // namespace openqfr::analytic

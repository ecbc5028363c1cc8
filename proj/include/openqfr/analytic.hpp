#pragma once

#include <vector>

#include "openqfr/linalg.hpp"
#include "openqfr/qubit_protocol.hpp"

namespace openqfr::analytic {

/// Perfect-absorption pulse train: n sigma_z measurements spaced by tau, each
/// followed by amplitude damping towards |0> of strength gamma_d_tl = Gamma_D t_L.
struct AnalyticParams {
    double alpha = 0.0;
    double omega = 1.0;
    double tau = 1.0;
    double gamma_d_tl = 0.0;
    int n = 1;

    void validate() const;
    QubitHamiltonian hamiltonian() const { return {omega, alpha}; }
};

/// 1 - 2 sin^2(alpha) sin^2(omega tau / 2)
double mu(double alpha, double omega, double tau);

/// Damping strength whose averaged effect equals pumping with probability p_diss:
/// exp(-gamma_d_tl) = 1 - p_diss.
double gamma_d_tl_from_p_diss(double p_diss);

/// M = (I4 + sigma_z (x) sigma_z) / 2.
SuperOperator measurement_superop();
/// N = (sigma_x (x) sigma_x - sigma_y (x) sigma_y) / 2, the population swap.
SuperOperator population_swap_superop();
/// exp(-i (H (x) I - I (x) H*) t).
SuperOperator unitary_superop(const QubitHamiltonian& h, double t);
/// exp(L t_L) for the jump operator sqrt(Gamma_D)|0><+1|, built with the Lindblad engine.
SuperOperator dissipation_superop(double gamma_d_tl);

/// Row-stacked |e><e| for an energy eigenstate.
ComplexVector vectorized_eigenprojector(const QubitHamiltonian& h, Energy e);

/// (1 + mu^n)/2 M + (1 - mu^n)/2 N. Requires gamma_d_tl = 0.
SuperOperator composed_superop_closed_form(const AnalyticParams& p);
/// (M U M)^n by explicit multiplication.
SuperOperator composed_superop_direct(const AnalyticParams& p);

/// M D^{1/2} (M D^{1/2} U D^{1/2} M)^{n-1} D^{1/2} M, composed step by step.
SuperOperator dissipative_superop_direct(const AnalyticParams& p);

/// P_{j|i} = 1/2 [1 + z_j cos(a) (R_n + z_i mu^{n-1} e^{-n g} cos(a))],
/// R_n = (1 - e^{-g}) / (1 - mu e^{-g}) (1 - mu^n e^{-n g}), with z = +1 for Up.
/// Throws NumericalError if the value leaves [0, 1] beyond rounding.
double conditional_prob_closed_form(const AnalyticParams& p, Energy initial, Energy final);
/// <<j| S_D |i>> from dissipative_superop_direct.
double conditional_prob_direct(const AnalyticParams& p, Energy initial, Energy final);

/// Stationary P(up) of the perfect-absorption pulsed map,
///   1/2 [1 + (1 - e^{-g}) cos(a) / (1 - e^{-g} mu)].
/// Throws DomainError for alpha in {0, pi}, or mu = 1 with g = 0.
double asymptotic_p_up(double alpha, double mu, double gamma_d_tl);
/// Same expression with the opposite sign of the cos(a) term, as printed in the
/// main-text formula. Kept for comparison; it does not match the pulsed map under
/// the sigma_z|0> = +|0> convention.
double asymptotic_p_up_printed(double alpha, double mu, double gamma_d_tl);

/// Geometric gap law f_l ~ p (1 - p)^(l - 1), l = 1..n, normalized to 1.
std::vector<double> gap_distribution(double p_abs, int n);
/// sum_l mu_l f_l with mu_l = mu(alpha, omega, l tau). Throws DomainError for p_abs = 0.
double effective_mu(double p_abs, int n, double alpha, double omega, double tau);

} // namespace openqfr::analytic

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "openqfr/lindblad.hpp"
#include "openqfr/qubit_protocol.hpp"

namespace openqfr::nv {

/// Level order {g+1, g0, g-1, e+1, e0, e-1, m}.
enum class NvLevel : int { GPlus = 0, G0 = 1, GMinus = 2, EPlus = 3, E0 = 4, EMinus = 5, M = 6 };
inline constexpr int kNvDim = 7;
inline int index(NvLevel l) { return static_cast<int>(l); }

/// Rates in 1/us; the Hamiltonian couplings reuse the same numbers as rad/us.
struct NvRates {
    double gamma_eg = 77.0;
    double gamma_1m = 60.4;
    double gamma_0m = 9.39;
    double gamma_m0 = 9.6;
    /// Metastable decay to g+1 and g-1; absent from the fitted table, zero by default.
    double gamma_m1 = 0.0;
    double theta = 0.193;
    /// Gamma_ge / Gamma_eg.
    double p_abs_optical = 0.45;

    /// gamma_eg > 0, other rates >= 0, theta in [0, pi/2), p_abs_optical in [0, 1].
    void validate() const;
    /// Spin non-conserving radiative rate tan^2(theta) Gamma_eg.
    double gamma_eg_flip() const;
};

struct DecayRoute {
    NvLevel to;
    NvLevel from;
    double rate;
    bool radiative;
};

/// Every nonzero decay channel, one entry per matrix element.
std::vector<DecayRoute> decay_routes(const NvRates& rates);

/// Coherent optical drive; zero matrix when laser_on is false.
ComplexMatrix seven_level_hamiltonian(const NvRates& rates, bool laser_on);

enum class JumpMode {
    /// One jump operator per route.
    PerRoute,
    /// The single summed matrix; channels interfere. Kept for comparison only.
    Aggregated,
};

ComplexMatrix aggregated_jump_operator(const NvRates& rates);

LindbladModel build_seven_level_model(const NvRates& rates, bool laser_on,
                                      JumpMode mode = JumpMode::PerRoute);

/// Branching ratio into the shelving channel from e+1: Gamma_1m / (Gamma_1m + Gamma_eg).
double p_diss_from_rates(const NvRates& rates);

/// Total radiative emission rate sum_r Tr[L_r^dag L_r rho].
double radiative_rate(const NvRates& rates, const DensityMatrix& rho);

/// PL(t) under continuous illumination. Throws DomainError unless t_grid is
/// strictly increasing and non-negative.
std::vector<double> simulate_pl(const NvRates& rates, const DensityMatrix& rho0,
                                const std::vector<double>& t_grid);

/// 7x7 Hamiltonian with the qubit drive on the {g0, g+1} block (g0 plays |0>).
ComplexMatrix embed_ground_hamiltonian(const QubitHamiltonian& h);
/// Ground-qubit state vector embedded in the 7-level space.
ComplexVector embed_ground_state(const QubitState& psi);

struct PulsedProtocol7 {
    QubitHamiltonian hamiltonian;
    double tau = 1.0;
    /// Laser window length (us).
    double t_l = 0.041;
    int n_pulses = 20;
    /// false: dark windows carry only the decays.
    bool microwave_on = true;
};

/// Applies n laser/dark periods to rho.
DensityMatrix evolve_pulsed(const NvRates& rates, const PulsedProtocol7& protocol,
                            const DensityMatrix& rho, int n_periods);

struct PulsedCurves {
    /// Elapsed time k (t_l + tau) for k = 0..n_pulses.
    std::vector<double> t;
    /// P(up | start up) and P(up | start down), read on the dressed ground states.
    std::vector<double> p_up_given_up;
    std::vector<double> p_up_given_down;
};

PulsedCurves simulate_pulsed_protocol_7l(const NvRates& rates, const PulsedProtocol7& protocol);

/// {P(up|up), P(up|down)} of the effective qubit model after k pulses for k = 0..n.
PulsedCurves two_level_curves(const ProtocolConfig& base, double p_abs);

struct EffectiveFit {
    double p_abs = 0.0;
    double distance = 0.0;
    /// Minimum sits on a bracket end or the objective is flat over the scan.
    bool boundary = false;
    bool flat = false;
};

/// L-infinity distance between two curve sets sampled on the same grid.
double curve_distance(const PulsedCurves& a, const PulsedCurves& b);

/// argmin over p in [lo, hi] of curve_distance(target, family(p)); coarse scan then
/// golden section to tol. Throws DomainError if the families' grids disagree.
EffectiveFit fit_effective_p_abs(const PulsedCurves& target,
                                 const std::function<PulsedCurves(double)>& family,
                                 double lo = 0.05, double hi = 1.0, double tol = 1e-3);

} // namespace openqfr::nv

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "openqfr/fluctuation.hpp"
#include "openqfr/lindblad.hpp"

namespace openqfr::three_level {

/// H = w12(|1><2| + h.c.) + w13(|1><3| + h.c.), decay sqrt(gamma)|1><2|.
struct ThreeLevelParams {
    double omega12 = 1.0;
    double omega13 = 0.21;
    double gamma = 1.5;
    double beta_init = 1.0;
    /// Weight of the dissipator in units of the standard GKSL form. 2 corresponds to
    /// the 2 L rho L^dag - {L^dag L, rho} normalization (population decay rate 2 gamma).
    double dissipator_weight = 2.0;

    void validate() const;
};

/// The five coupling ratios of the reference scan.
inline const std::vector<double> kReferenceOmega13 = {0.21, 0.41, 0.91, 1.51, 2.28};

struct ThreeLevelSystem {
    ThreeLevelParams params;
    LindbladModel model;
    /// Ascending energies {-W, 0, +W}, W = sqrt(w12^2 + w13^2).
    RealVector energies;
    /// Orthonormal eigenvectors as columns, ordered like energies.
    ComplexMatrix eigenvectors;
};

ThreeLevelSystem build_3ls(const ThreeLevelParams& params);

struct ThermalState {
    DensityMatrix rho;
    /// e^{-beta E_i} / Z in the order of ThreeLevelSystem::energies.
    RealVector populations;
};

/// Gibbs state of H at beta (beta_init by default).
ThermalState initial_thermal_state(const ThreeLevelSystem& sys);
ThermalState initial_thermal_state(const ThreeLevelSystem& sys, double beta);

/// P_{j|i}(t): start in eigenprojector i, propagate for t, read population of j.
RealMatrix tpm_conditionals_3ls(const ThreeLevelSystem& sys, double t);

/// Energy-basis populations of the unique steady state.
RealVector steady_energy_populations(const ThreeLevelSystem& sys);

/// G(eta) - 1 from the double sum over (i, j).
double g_of_eta(const RealVector& energies, const RealVector& p_initial,
                const RealMatrix& conditional, double eta);
/// (sum_j Pt_j e^{-eta E_j})(sum_i P_i e^{eta E_i}) - 1, valid when all rows equal Pt.
double g_of_eta_factorized(const RealVector& energies, const RealVector& p_initial,
                           const RealVector& p_final, double eta);

/// Zeros of g on an ascending grid: samples with |g| <= zero_tol plus sign
/// changes between consecutive samples outside that band.
int count_zeros(const std::vector<double>& values, double zero_tol = 0.0);

struct EpsilonTrace {
    std::vector<double> t;
    /// Empty where the root search was Degenerate or found no bracket.
    std::vector<std::optional<double>> epsilon;
    std::vector<std::string> note;
    /// First index from which every epsilon exists and stays within settle_tol of the
    /// final value; -1 if the series never settles.
    int settled_from = -1;
};

/// Root of g(eta) at each time of t_grid (increasing, within [0, 80]).
EpsilonTrace epsilon_trace(const ThreeLevelSystem& sys, const RealVector& p_initial,
                           const std::vector<double>& t_grid, double settle_tol = 1e-3);

/// 161 uniform points on [0, 80].
std::vector<double> default_time_grid();

} // namespace openqfr::three_level

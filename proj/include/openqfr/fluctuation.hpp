#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "openqfr/linalg.hpp"
#include "openqfr/qubit_protocol.hpp"

namespace openqfr {

/// Probability mass over distinct energy changes Delta E = E_j - E_i.
struct EnergyChangeDistribution {
    std::vector<double> delta_e;
    std::vector<double> prob;
    /// Standard errors; zero for exact inputs.
    std::vector<double> std_error;

    double mean() const;
    double total() const;
};

/// Aggregates P_i P_{j|i} by Delta E. `conditional(i, j)` = P_{j|i}.
/// Values closer than merge_tol are treated as one support point.
/// Throws DomainError if a row or p_initial is not normalized within row_tol.
EnergyChangeDistribution delta_e_distribution(std::span<const double> levels,
                                              std::span<const double> p_initial,
                                              const RealMatrix& conditional,
                                              double row_tol = 1e-10,
                                              double merge_tol = 1e-12);

/// Qubit distribution from a Monte Carlo tally with prescribed P(up) of the
/// initial state; support {-omega, 0, +omega} with binomial standard errors.
EnergyChangeDistribution delta_e_distribution(const TpmTally& tally, double p_up_initial,
                                              double omega);

/// G(eps) = sum P(dE) exp(-eps dE). Throws DomainError if |eps dE| > 700.
double characteristic_g(const EnergyChangeDistribution& dist, double epsilon);

struct EffectiveBeta {
    double beta = 0.0;
    double p_up = 0.5;
    /// p_up > 1/2: population inversion, beta < 0.
    bool inverted = false;
};

/// beta = (2/omega) artanh(1 - 2 p_up). Throws DomainError for p_up outside (0, 1)
/// (beta unbounded).
EffectiveBeta effective_beta(double p_up, double omega);
/// Inverse of effective_beta.
double p_up_from_beta(double beta, double omega);

struct EpsilonSearch {
    double range = 5.0;
    double exclusion = 1e-4;
    int grid_points = 2001;
    /// Range doublings attempted when no bracket is found.
    int max_extensions = 4;
    /// |G'(0)| = |<dE>| below this is reported as Degenerate.
    double mean_tol = 1e-10;
    double value_tol = 1e-10;
    double interval_tol = 1e-8;
};

struct EpsilonResult {
    enum class Status { Root, Degenerate };
    Status status = Status::Degenerate;
    double epsilon = 0.0;
    double residual = 0.0;
    /// G'(0) = -<dE> estimated by central difference.
    double slope_at_zero = 0.0;
};

/// Non-zero root of G(eps) = 1. Throws NoRootInRange when no sign change of G - 1
/// exists in the (extended) scan range.
EpsilonResult find_epsilon(const std::function<double(double)>& g,
                           const EpsilonSearch& search = {});

/// Pools P(up|up) and P(up|down) from the last quarter of a pulse schedule
/// (at least one tally). Throws StillTransient if they differ by more than
/// n_sigma combined standard errors.
double estimate_asymptotic_p_up(std::span<const TpmTally> schedule, double n_sigma = 3.0);

/// Initial P(up) for which <dE> = 0 given the conditionals:
/// P(up|down) / (1 - P(up|up) + P(up|down)).
double zero_mean_initial_p_up(double p_up_given_up, double p_up_given_down);

struct ExchangeOptions {
    int n_bootstrap = 1000;
    double ci_level = 0.99;
    double tolerance = 0.05;
    std::uint64_t seed = 0;
};

struct ExchangeCheck {
    double g = 1.0;
    double ci_low = 1.0;
    double ci_high = 1.0;
    double delta_beta = 0.0;
    double p_up_asymptotic = 0.5;
    bool pass = false;
};

/// Evaluates G(delta_beta_eff) on the tally's Delta E distribution with
/// delta_beta_eff = beta(p_up_initial) - beta(p_up_asymptotic), and a percentile
/// bootstrap CI over trajectories. When `asymptote` is given, p_up_asymptotic is
/// re-estimated from each resampled copy of it, so its sampling error enters the CI.
/// Pass: 1 inside the CI and |G - 1| <= tolerance.
ExchangeCheck verify_exchange_relation(const TpmTally& tally, double p_up_initial,
                                       double p_up_asymptotic, double omega,
                                       const ExchangeOptions& options = {},
                                       const TpmTally* asymptote = nullptr);

/// Single-threaded reference of the bootstrap replicates used above.
std::vector<double> bootstrap_g_serial(const TpmTally& tally, double p_up_initial,
                                       double p_up_asymptotic, double omega,
                                       const ExchangeOptions& options,
                                       const TpmTally* asymptote = nullptr);
/// OpenMP version; identical output for any thread count.
std::vector<double> bootstrap_g(const TpmTally& tally, double p_up_initial,
                                double p_up_asymptotic, double omega,
                                const ExchangeOptions& options,
                                const TpmTally* asymptote = nullptr);

/// Multinomial resample of a tally (equivalent to resampling its trajectories).
TpmTally resample(const TpmTally& tally, StreamRng& rng);

} // namespace openqfr

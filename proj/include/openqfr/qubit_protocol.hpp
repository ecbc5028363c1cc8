#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "openqfr/linalg.hpp"
#include "openqfr/rng.hpp"

namespace openqfr {

/// Energy eigenstate label; the integer value is the row/column index in tallies.
enum class Energy : int { Up = 0, Down = 1 };

inline Energy flip(Energy e) { return e == Energy::Up ? Energy::Down : Energy::Up; }
/// +1 for Up (E = +omega/2), -1 for Down.
inline int sign(Energy e) { return e == Energy::Up ? 1 : -1; }

/// Two-level state in the {|0>, |+1>} basis; sigma_z|0> = +|0>.
using QubitState = Eigen::Vector2cd;

/// H = (omega/2)(cos(alpha) sigma_z - sin(alpha) sigma_x), hbar = 1.
struct QubitHamiltonian {
    double omega = 1.0;
    double alpha = 0.0;

    /// tan(alpha) = -rabi/detuning, omega = sqrt(detuning^2 + rabi^2), alpha in (0, pi).
    /// Throws DomainError for rabi <= 0.
    static QubitHamiltonian from_drive(double detuning, double rabi);

    ComplexMatrix matrix() const;
    /// |up> = cos(alpha/2)|0> - sin(alpha/2)|+1>
    QubitState up() const;
    /// |down> = sin(alpha/2)|0> + cos(alpha/2)|+1>
    QubitState down() const;
    QubitState eigenstate(Energy e) const { return e == Energy::Up ? up() : down(); }
    double energy(Energy e) const { return 0.5 * omega * sign(e); }
    /// Closed-form exp(-i H t).
    Eigen::Matrix2cd evolution(double t) const;
};

/// Spin-locked unitary segment: rotation about (-sin a, 0, cos a) by omega t.
QubitState unitary_between_pulses(const QubitState& psi, const QubitHamiltonian& h, double t);
ComplexMatrix unitary_between_pulses(const ComplexMatrix& rho, const QubitHamiltonian& h,
                                     double t);

/// One laser pulse: with probability p_abs a sigma_z projective measurement,
/// followed (outcome |+1>) by pumping to |0> with probability p_diss.
QubitState apply_laser_pulse(const QubitState& psi, StreamRng& rng, double p_abs, double p_diss);

struct ProtocolConfig {
    QubitHamiltonian hamiltonian;
    double tau = 1.0;
    int n_pulses = 0;
    double p_abs = 0.18;
    double p_diss = 0.44;
    /// Classical flip of the recorded final outcome (tan^2 theta).
    double readout_flip = 0.0;
    double p_up_initial = 0.5;
    std::int64_t n_traj = 1;
    std::uint64_t seed = 0;
    /// Extra free evolution between the last pulse and the final energy measurement.
    double tail_time = 0.0;

    /// Throws DomainError when a field is out of range.
    void validate() const;
};

struct TrajectoryOutcome {
    Energy initial;
    Energy final;
};

/// One TPM realization drawn from `rng`.
TrajectoryOutcome run_trajectory(const ProtocolConfig& cfg, StreamRng& rng);
/// Realization `stream` of the run seeded by cfg.seed.
TrajectoryOutcome run_trajectory(const ProtocolConfig& cfg, std::uint64_t stream);

/// Counts indexed [initial][final].
struct TpmTally {
    std::array<std::array<std::int64_t, 2>, 2> counts{};

    std::int64_t total() const;
    std::int64_t row_total(Energy initial) const;
    std::int64_t count(Energy initial, Energy final) const {
        return counts[static_cast<int>(initial)][static_cast<int>(final)];
    }
    void add(const TrajectoryOutcome& o) {
        ++counts[static_cast<int>(o.initial)][static_cast<int>(o.final)];
    }
    TpmTally& operator+=(const TpmTally& other);
    bool operator==(const TpmTally&) const = default;
};

/// Trajectories [first, first + count) of the run.
TpmTally run_batch_range(const ProtocolConfig& cfg, std::int64_t first, std::int64_t count);

/// OpenMP batch over cfg.n_traj trajectories. Stream id = trajectory index, so the
/// tally does not depend on the thread count.
TpmTally run_batch(const ProtocolConfig& cfg);
/// Single-threaded reference for run_batch.
TpmTally run_batch_serial(const ProtocolConfig& cfg);

struct ConditionalProbs {
    double p_up_given_up = 0.0;
    double se_up_given_up = 0.0;
    double p_up_given_down = 0.0;
    double se_up_given_down = 0.0;
};

/// Binomial estimates of P(up|up), P(up|down). Throws DomainError on an empty row.
ConditionalProbs conditional_probs(const TpmTally& tally);

/// Exact expectation of the Monte Carlo protocol: {P(up|up), P(up|down)},
/// averaged over absorption patterns by dynamic programming on the gap since
/// the last absorption. Readout flip included.
std::array<double, 2> expected_conditionals(const ProtocolConfig& cfg);

} // namespace openqfr

#include "openqfr/qubit_protocol.hpp"

#include <cmath>
#include <string>

#include <omp.h>

#include "openqfr/errors.hpp"

namespace openqfr {

QubitHamiltonian QubitHamiltonian::from_drive(double detuning, double rabi) {
    if (!(rabi > 0.0)) throw DomainError("Rabi frequency must be positive");
    // tan(alpha) = -rabi/detuning with alpha in (0, pi); detuning = 0 gives pi/2.
    return {std::hypot(detuning, rabi), std::atan2(rabi, -detuning)};
}

ComplexMatrix QubitHamiltonian::matrix() const {
    return 0.5 * omega * (std::cos(alpha) * pauli::z() - std::sin(alpha) * pauli::x());
}

QubitState QubitHamiltonian::up() const {
    return {std::cos(0.5 * alpha), -std::sin(0.5 * alpha)};
}

QubitState QubitHamiltonian::down() const {
    return {std::sin(0.5 * alpha), std::cos(0.5 * alpha)};
}

Eigen::Matrix2cd QubitHamiltonian::evolution(double t) const {
    const double half = 0.5 * omega * t;
    const Complex c{std::cos(half), 0.0};
    const Complex s{0.0, -std::sin(half)};
    const double nz = std::cos(alpha);
    const double nx = -std::sin(alpha);
    Eigen::Matrix2cd u;
    u << c + s * nz, s * nx, s * nx, c - s * nz;
    return u;
}

QubitState unitary_between_pulses(const QubitState& psi, const QubitHamiltonian& h, double t) {
    return h.evolution(t) * psi;
}

ComplexMatrix unitary_between_pulses(const ComplexMatrix& rho, const QubitHamiltonian& h,
                                     double t) {
    const Eigen::Matrix2cd u = h.evolution(t);
    return u * rho * u.adjoint();
}

QubitState apply_laser_pulse(const QubitState& psi, StreamRng& rng, double p_abs, double p_diss) {
    if (!rng.bernoulli(p_abs)) return psi;
    const double p_zero = std::norm(psi(0)) / psi.squaredNorm();
    if (rng.bernoulli(p_zero)) return {1.0, 0.0};
    if (rng.bernoulli(p_diss)) return {1.0, 0.0};
    return {0.0, 1.0};
}

void ProtocolConfig::validate() const {
    auto probability = [](double p, const char* name, bool open_top) {
        if (!(p >= 0.0) || (open_top ? !(p < 1.0) : !(p <= 1.0)))
            throw DomainError(std::string(name) + " out of range: " + std::to_string(p));
    };
    if (!(hamiltonian.omega > 0.0)) throw DomainError("omega must be positive");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    if (n_pulses < 0) throw DomainError("n_pulses must be non-negative");
    probability(p_abs, "p_abs", false);
    probability(p_diss, "p_diss", false);
    probability(readout_flip, "readout_flip", true);
    if (!(p_up_initial > 0.0 && p_up_initial < 1.0))
        throw DomainError("p_up_initial must lie in (0, 1)");
    if (n_traj < 1) throw DomainError("n_traj must be at least 1");
    if (!(tail_time >= 0.0)) throw DomainError("tail_time must be non-negative");
}

TrajectoryOutcome run_trajectory(const ProtocolConfig& cfg, StreamRng& rng) {
    const QubitHamiltonian& h = cfg.hamiltonian;
    const Energy initial = rng.bernoulli(cfg.p_up_initial) ? Energy::Up : Energy::Down;
    QubitState psi = h.eigenstate(initial);
    const Eigen::Matrix2cd u = h.evolution(cfg.tau);
    for (int k = 0; k < cfg.n_pulses; ++k) {
        psi = u * psi;
        psi = apply_laser_pulse(psi, rng, cfg.p_abs, cfg.p_diss);
    }
    if (cfg.tail_time > 0.0) psi = h.evolution(cfg.tail_time) * psi;

    const double p_up = std::norm(h.up().dot(psi)) / psi.squaredNorm();
    Energy final = rng.bernoulli(p_up) ? Energy::Up : Energy::Down;
    if (cfg.readout_flip > 0.0 && rng.bernoulli(cfg.readout_flip)) final = flip(final);
    return {initial, final};
}

TrajectoryOutcome run_trajectory(const ProtocolConfig& cfg, std::uint64_t stream) {
    StreamRng rng(cfg.seed, stream);
    return run_trajectory(cfg, rng);
}

std::int64_t TpmTally::total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

std::int64_t TpmTally::row_total(Energy initial) const {
    const auto& row = counts[static_cast<int>(initial)];
    return row[0] + row[1];
}

TpmTally& TpmTally::operator+=(const TpmTally& other) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) counts[i][j] += other.counts[i][j];
    return *this;
}

TpmTally run_batch_range(const ProtocolConfig& cfg, std::int64_t first, std::int64_t count) {
    cfg.validate();
    TpmTally tally;
    for (std::int64_t k = first; k < first + count; ++k)
        tally.add(run_trajectory(cfg, static_cast<std::uint64_t>(k)));
    return tally;
}

TpmTally run_batch_serial(const ProtocolConfig& cfg) { return run_batch_range(cfg, 0, cfg.n_traj); }

TpmTally run_batch(const ProtocolConfig& cfg) {
    cfg.validate();
    std::int64_t c00 = 0, c01 = 0, c10 = 0, c11 = 0;
#pragma omp parallel for schedule(static) reduction(+ : c00, c01, c10, c11)
    for (std::int64_t k = 0; k < cfg.n_traj; ++k) {
        const TrajectoryOutcome o = run_trajectory(cfg, static_cast<std::uint64_t>(k));
        const int idx = 2 * static_cast<int>(o.initial) + static_cast<int>(o.final);
        c00 += idx == 0;
        c01 += idx == 1;
        c10 += idx == 2;
        c11 += idx == 3;
    }
    TpmTally tally;
    tally.counts = {{{c00, c01}, {c10, c11}}};
    return tally;
}

ConditionalProbs conditional_probs(const TpmTally& tally) {
    const auto n_up = tally.row_total(Energy::Up);
    const auto n_down = tally.row_total(Energy::Down);
    if (n_up == 0 || n_down == 0)
        throw DomainError("conditional_probs: an initial energy was never sampled");
    auto estimate = [](std::int64_t hits, std::int64_t n) {
        const double p = static_cast<double>(hits) / static_cast<double>(n);
        return std::pair{p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
    };
    const auto [puu, seu] = estimate(tally.count(Energy::Up, Energy::Up), n_up);
    const auto [pud, sed] = estimate(tally.count(Energy::Down, Energy::Up), n_down);
    return {puu, seu, pud, sed};
}

std::array<double, 2> expected_conditionals(const ProtocolConfig& cfg) {
    cfg.validate();
    const QubitHamiltonian& h = cfg.hamiltonian;
    const int n = cfg.n_pulses;
    const double keep = 1.0 - cfg.p_diss;
    const double cos_a = std::cos(h.alpha);

    // z-polarization retained by a sigma_z-diagonal state after l free periods,
    // obtained by evolving |0><0| directly.
    std::vector<double> survival(static_cast<std::size_t>(n) + 1, 1.0);
    for (int l = 1; l <= n; ++l) {
        ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
        rho(0, 0) = 1.0;
        rho = unitary_between_pulses(rho, h, l * cfg.tau);
        survival[l] = (rho(0, 0) - rho(1, 1)).real();
    }

    std::array<double, 2> result{};
    for (Energy initial : {Energy::Up, Energy::Down}) {
        const double e0 = sign(initial);
        // mass[l], zmass[l]: probability (and probability-weighted z) that the last
        // absorption happened l pulses ago.
        std::vector<double> mass(static_cast<std::size_t>(n) + 1, 0.0);
        std::vector<double> zmass(static_cast<std::size_t>(n) + 1, 0.0);
        double untouched = 1.0;
        for (int k = 0; k < n; ++k) {
            std::vector<double> next_mass(mass.size(), 0.0);
            std::vector<double> next_z(mass.size(), 0.0);
            double absorbed = 0.0;
            double absorbed_z = 0.0;
            for (int l = 0; l <= k; ++l) {
                if (mass[l] == 0.0 && zmass[l] == 0.0) continue;
                const int gap = l + 1;
                absorbed += cfg.p_abs * mass[l];
                absorbed_z += cfg.p_abs * ((1.0 - keep) * mass[l] + keep * survival[gap] * zmass[l]);
                next_mass[gap] += (1.0 - cfg.p_abs) * mass[l];
                next_z[gap] += (1.0 - cfg.p_abs) * zmass[l];
            }
            // First absorption: the eigenstate is projected with z = cos(alpha) * e0.
            absorbed += cfg.p_abs * untouched;
            absorbed_z += cfg.p_abs * untouched * ((1.0 - keep) + keep * cos_a * e0);
            untouched *= 1.0 - cfg.p_abs;
            next_mass[0] = absorbed;
            next_z[0] = absorbed_z;
            mass.swap(next_mass);
            zmass.swap(next_z);
        }
        // Free evolution after the last absorption conserves energy populations.
        double p_up = untouched * 0.5 * (1.0 + e0);
        for (std::size_t l = 0; l < mass.size(); ++l) p_up += 0.5 * (mass[l] + cos_a * zmass[l]);
        p_up = (1.0 - cfg.readout_flip) * p_up + cfg.readout_flip * (1.0 - p_up);
        result[static_cast<int>(initial)] = p_up;
    }
    return result;
}

} // namespace openqfr

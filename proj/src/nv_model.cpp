#include "openqfr/nv_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "openqfr/errors.hpp"

namespace openqfr::nv {

namespace {

using L = NvLevel;

ComplexMatrix transition(NvLevel to, NvLevel from, double amplitude) {
    ComplexMatrix m = ComplexMatrix::Zero(kNvDim, kNvDim);
    m(index(to), index(from)) = amplitude;
    return m;
}

} // namespace

void NvRates::validate() const {
    if (!(gamma_eg > 0.0)) throw DomainError("NvRates: gamma_eg must be positive");
    for (double r : {gamma_1m, gamma_0m, gamma_m0, gamma_m1})
        if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("NvRates: negative rate");
    if (!(theta >= 0.0 && theta < std::numbers::pi / 2))
        throw DomainError("NvRates: theta must lie in [0, pi/2)");
    if (!(p_abs_optical >= 0.0 && p_abs_optical <= 1.0))
        throw DomainError("NvRates: p_abs_optical must lie in [0, 1]");
}

double NvRates::gamma_eg_flip() const {
    const double t = std::tan(theta);
    return t * t * gamma_eg;
}

std::vector<DecayRoute> decay_routes(const NvRates& rates) {
    rates.validate();
    const double flip = rates.gamma_eg_flip();
    const std::vector<DecayRoute> all = {
        {L::GPlus, L::EPlus, rates.gamma_eg, true},
        {L::G0, L::E0, rates.gamma_eg, true},
        {L::GMinus, L::EMinus, rates.gamma_eg, true},
        {L::GPlus, L::E0, 0.5 * flip, true},
        {L::G0, L::EPlus, flip, true},
        {L::G0, L::EMinus, flip, true},
        {L::GMinus, L::E0, 0.5 * flip, true},
        {L::M, L::EPlus, rates.gamma_1m, false},
        {L::M, L::E0, rates.gamma_0m, false},
        {L::M, L::EMinus, rates.gamma_1m, false},
        {L::G0, L::M, rates.gamma_m0, false},
        {L::GPlus, L::M, rates.gamma_m1, false},
        {L::GMinus, L::M, rates.gamma_m1, false},
    };
    std::vector<DecayRoute> out;
    std::copy_if(all.begin(), all.end(), std::back_inserter(out),
                 [](const DecayRoute& r) { return r.rate > 0.0; });
    return out;
}

ComplexMatrix seven_level_hamiltonian(const NvRates& rates, bool laser_on) {
    rates.validate();
    ComplexMatrix h = ComplexMatrix::Zero(kNvDim, kNvDim);
    if (!laser_on) return h;
    const double big = rates.p_abs_optical * rates.gamma_eg;
    const double t = std::tan(rates.theta);
    const double small = t * t * big;
    auto couple = [&](NvLevel g, NvLevel e, double v) {
        h(index(g), index(e)) = v;
        h(index(e), index(g)) = v;
    };
    couple(L::GPlus, L::EPlus, big);
    couple(L::GPlus, L::E0, small);
    couple(L::G0, L::EPlus, 0.5 * small);
    couple(L::G0, L::E0, big);
    couple(L::G0, L::EMinus, 0.5 * small);
    couple(L::GMinus, L::E0, small);
    couple(L::GMinus, L::EMinus, big);
    return h;
}

ComplexMatrix aggregated_jump_operator(const NvRates& rates) {
    ComplexMatrix sum = ComplexMatrix::Zero(kNvDim, kNvDim);
    for (const DecayRoute& r : decay_routes(rates)) sum += transition(r.to, r.from, std::sqrt(r.rate));
    return sum;
}

LindbladModel build_seven_level_model(const NvRates& rates, bool laser_on, JumpMode mode) {
    ComplexMatrix h = seven_level_hamiltonian(rates, laser_on);
    if (mode == JumpMode::Aggregated) return LindbladModel(std::move(h), {aggregated_jump_operator(rates)});
    std::vector<ComplexMatrix> jumps;
    for (const DecayRoute& r : decay_routes(rates)) jumps.push_back(transition(r.to, r.from, std::sqrt(r.rate)));
    return LindbladModel(std::move(h), std::move(jumps));
}

double p_diss_from_rates(const NvRates& rates) {
    rates.validate();
    return rates.gamma_1m / (rates.gamma_1m + rates.gamma_eg);
}

double radiative_rate(const NvRates& rates, const DensityMatrix& rho) {
    if (rho.dim() != kNvDim) throw DomainError("radiative_rate: expected a 7-level state");
    // Tr[L^dag L rho] for L = sqrt(r)|to><from| is r * rho(from, from).
    double total = 0.0;
    for (const DecayRoute& r : decay_routes(rates))
        if (r.radiative) total += r.rate * rho.population(index(r.from));
    return total;
}

std::vector<double> simulate_pl(const NvRates& rates, const DensityMatrix& rho0,
                                const std::vector<double>& t_grid) {
    if (rho0.dim() != kNvDim) throw DomainError("simulate_pl: expected a 7-level state");
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (!(t_grid[k] >= 0.0)) throw DomainError("simulate_pl: negative time");
        if (k > 0 && !(t_grid[k] > t_grid[k - 1]))
            throw DomainError("simulate_pl: time grid must be strictly increasing");
    }
    const LindbladModel model = build_seven_level_model(rates, true);
    std::vector<double> pl;
    pl.reserve(t_grid.size());
    DensityMatrix rho = rho0;
    double t_prev = 0.0;
    for (double t : t_grid) {
        if (t > t_prev) rho = propagate(model, rho, t - t_prev);
        t_prev = t;
        pl.push_back(radiative_rate(rates, rho));
    }
    return pl;
}

ComplexMatrix embed_ground_hamiltonian(const QubitHamiltonian& h) {
    const ComplexMatrix q = h.matrix();
    const int idx[2] = {index(L::G0), index(L::GPlus)};
    ComplexMatrix out = ComplexMatrix::Zero(kNvDim, kNvDim);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) out(idx[a], idx[b]) = q(a, b);
    return out;
}

ComplexVector embed_ground_state(const QubitState& psi) {
    ComplexVector v = ComplexVector::Zero(kNvDim);
    v(index(L::G0)) = psi(0);
    v(index(L::GPlus)) = psi(1);
    return v;
}

namespace {


SuperOperator period_superop(const NvRates& rates, const PulsedProtocol7& p) {
    if (!(p.t_l >= 0.0)) throw DomainError("PulsedProtocol7: t_l must be non-negative");
    if (!(p.tau >= 0.0)) throw DomainError("PulsedProtocol7: tau must be non-negative");
    const LindbladModel laser = build_seven_level_model(rates, true);
    const LindbladModel dark_decay = build_seven_level_model(rates, false);
    const ComplexMatrix h_dark = p.microwave_on ? embed_ground_hamiltonian(p.hamiltonian)
                                                : ComplexMatrix::Zero(kNvDim, kNvDim);
    const LindbladModel dark(h_dark, dark_decay.jump_operators());
    const Propagator u_laser(laser, p.t_l);
    const Propagator u_dark(dark, p.tau);
    return u_dark.superoperator() * u_laser.superoperator();
}

} // namespace

DensityMatrix evolve_pulsed(const NvRates& rates, const PulsedProtocol7& protocol,
                            const DensityMatrix& rho, int n_periods) {
    if (n_periods < 0) throw DomainError("evolve_pulsed: negative period count");
    if (rho.dim() != kNvDim) throw DomainError("evolve_pulsed: expected a 7-level state");
    const Propagator step(period_superop(rates, protocol).pow(n_periods));
    return step.apply(rho);
}

PulsedCurves simulate_pulsed_protocol_7l(const NvRates& rates, const PulsedProtocol7& protocol) {
    if (protocol.n_pulses < 0) throw DomainError("PulsedProtocol7: negative pulse count");
    const Propagator step(period_superop(rates, protocol));
    const ComplexVector up = embed_ground_state(protocol.hamiltonian.up());
    const ComplexVector down = embed_ground_state(protocol.hamiltonian.down());

    PulsedCurves out;
    auto run = [&](const ComplexVector& start, std::vector<double>& curve) {
        ComplexVector v = vectorize(DensityMatrix::pure(start).matrix());
        for (int k = 0; k <= protocol.n_pulses; ++k) {
            const ComplexMatrix rho = devectorize(v);
            curve.push_back((up.adjoint() * rho * up)(0, 0).real());
            v = step.apply(v);
        }
    };
    run(up, out.p_up_given_up);
    run(down, out.p_up_given_down);
    for (int k = 0; k <= protocol.n_pulses; ++k) out.t.push_back(k * (protocol.t_l + protocol.tau));
    return out;
}

PulsedCurves two_level_curves(const ProtocolConfig& base, double p_abs) {
    PulsedCurves out;
    for (int k = 0; k <= base.n_pulses; ++k) {
        ProtocolConfig cfg = base;
        cfg.n_pulses = k;
        cfg.p_abs = p_abs;
        const std::array<double, 2> p = expected_conditionals(cfg);
        out.t.push_back(k * base.tau);
        out.p_up_given_up.push_back(p[0]);
        out.p_up_given_down.push_back(p[1]);
    }
    return out;
}

double curve_distance(const PulsedCurves& a, const PulsedCurves& b) {
    if (a.p_up_given_up.size() != b.p_up_given_up.size() ||
        a.p_up_given_down.size() != b.p_up_given_down.size())
        throw DomainError("curve_distance: curves sampled on different grids");
    double d = 0.0;
    for (std::size_t k = 0; k < a.p_up_given_up.size(); ++k)
        d = std::max(d, std::abs(a.p_up_given_up[k] - b.p_up_given_up[k]));
    for (std::size_t k = 0; k < a.p_up_given_down.size(); ++k)
        d = std::max(d, std::abs(a.p_up_given_down[k] - b.p_up_given_down[k]));
    return d;
}

EffectiveFit fit_effective_p_abs(const PulsedCurves& target,
                                 const std::function<PulsedCurves(double)>& family,
                                 double lo, double hi, double tol) {
    if (!(lo < hi) || !(tol > 0.0)) throw DomainError("fit_effective_p_abs: bad bracket");
    auto objective = [&](double p) { return curve_distance(target, family(p)); };

    constexpr int kCoarse = 20;
    const double step = (hi - lo) / kCoarse;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    double worst_val = 0.0;
    for (int k = 0; k <= kCoarse; ++k) {
        const double v = objective(lo + k * step);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
        worst_val = std::max(worst_val, v);
    }

    EffectiveFit fit;
    fit.flat = worst_val - best_val <= 1e-12;
    double a = lo + std::max(best - 1, 0) * step;
    double b = lo + std::min(best + 1, kCoarse) * step;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    fit.p_abs = 0.5 * (a + b);
    fit.distance = objective(fit.p_abs);
    // Grid endpoints can beat the interior golden-section estimate.
    for (double edge : {lo, hi}) {
        const double v = objective(edge);
        if (v < fit.distance) {
            fit.p_abs = edge;
            fit.distance = v;
        }
    }
    fit.boundary = fit.p_abs - lo <= tol || hi - fit.p_abs <= tol;
    return fit;
}

} // namespace openqfr::nv

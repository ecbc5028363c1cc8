#include "openqfr/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <omp.h>

#include "openqfr/errors.hpp"

namespace openqfr {

double EnergyChangeDistribution::mean() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < prob.size(); ++k) acc += prob[k] * delta_e[k];
    return acc;
}

double EnergyChangeDistribution::total() const {
    double acc = 0.0;
    for (double p : prob) acc += p;
    return acc;
}

namespace {

void add_mass(EnergyChangeDistribution& dist, double de, double p, double merge_tol) {
    for (std::size_t k = 0; k < dist.delta_e.size(); ++k) {
        if (std::abs(dist.delta_e[k] - de) <= merge_tol) {
            dist.prob[k] += p;
            return;
        }
    }
    dist.delta_e.push_back(de);
    dist.prob.push_back(p);
    dist.std_error.push_back(0.0);
}

void sort_support(EnergyChangeDistribution& dist) {
    std::vector<std::size_t> order(dist.delta_e.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return dist.delta_e[a] < dist.delta_e[b]; });
    EnergyChangeDistribution sorted;
    for (std::size_t k : order) {
        sorted.delta_e.push_back(dist.delta_e[k]);
        sorted.prob.push_back(dist.prob[k]);
        sorted.std_error.push_back(dist.std_error[k]);
    }
    dist = std::move(sorted);
}

} // namespace

EnergyChangeDistribution delta_e_distribution(std::span<const double> levels,
                                              std::span<const double> p_initial,
                                              const RealMatrix& conditional, double row_tol,
                                              double merge_tol) {
    const auto n = static_cast<Eigen::Index>(levels.size());
    if (static_cast<Eigen::Index>(p_initial.size()) != n || conditional.rows() != n ||
        conditional.cols() != n)
        throw DomainError("delta_e_distribution: inconsistent dimensions");
    double p_sum = 0.0;
    for (double p : p_initial) {
        if (p < 0.0) throw DomainError("delta_e_distribution: negative initial probability");
        p_sum += p;
    }
    if (std::abs(p_sum - 1.0) > row_tol)
        throw DomainError("delta_e_distribution: initial probabilities sum to " +
                          std::to_string(p_sum));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double row = conditional.row(i).sum();
        if (std::abs(row - 1.0) > row_tol || conditional.row(i).minCoeff() < 0.0)
            throw DomainError("delta_e_distribution: conditional row " + std::to_string(i) +
                              " sums to " + std::to_string(row));
    }
    EnergyChangeDistribution dist;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double mass = p_initial[i] * conditional(i, j);
            if (mass > 0.0) add_mass(dist, levels[j] - levels[i], mass, merge_tol);
        }
    sort_support(dist);
    return dist;
}

EnergyChangeDistribution delta_e_distribution(const TpmTally& tally, double p_up_initial,
                                              double omega) {
    const ConditionalProbs c = conditional_probs(tally);
    const double p = p_up_initial;
    EnergyChangeDistribution dist;
    dist.delta_e = {-omega, 0.0, omega};
    const double down = p * (1.0 - c.p_up_given_up);
    const double up = (1.0 - p) * c.p_up_given_down;
    dist.prob = {down, 1.0 - down - up, up};
    const double se_uu = p * c.se_up_given_up;
    const double se_ud = (1.0 - p) * c.se_up_given_down;
    dist.std_error = {se_uu, std::hypot(se_uu, se_ud), se_ud};
    return dist;
}

double characteristic_g(const EnergyChangeDistribution& dist, double epsilon) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dist.prob.size(); ++k) {
        const double exponent = -epsilon * dist.delta_e[k];
        if (std::abs(exponent) > 700.0)
            throw DomainError("characteristic_g: |eps * dE| = " + std::to_string(std::abs(exponent)) +
                              " overflows");
        acc += dist.prob[k] * std::exp(exponent);
    }
    return acc;
}

EffectiveBeta effective_beta(double p_up, double omega) {
    if (!(omega > 0.0)) throw DomainError("effective_beta: omega must be positive");
    if (!(p_up > 0.0 && p_up < 1.0))
        throw DomainError("effective_beta: p_up = " + std::to_string(p_up) +
                          " gives an unbounded inverse temperature");
    return {2.0 / omega * std::atanh(1.0 - 2.0 * p_up), p_up, p_up > 0.5};
}

double p_up_from_beta(double beta, double omega) {
    return 0.5 * (1.0 - std::tanh(0.5 * beta * omega));
}

EpsilonResult find_epsilon(const std::function<double(double)>& g, const EpsilonSearch& search) {
    EpsilonResult result;
    constexpr double kStep = 1e-6;
    result.slope_at_zero = (g(kStep) - g(-kStep)) / (2.0 * kStep);
    if (std::abs(result.slope_at_zero) <= search.mean_tol) {
        result.status = EpsilonResult::Status::Degenerate;
        result.residual = g(0.0) - 1.0;
        return result;
    }

    auto excess = [&](double eps, bool& ok) {
        try {
            ok = true;
            return g(eps) - 1.0;
        } catch (const DomainError&) {
            ok = false;
            return 0.0;
        }
    };

    // G is convex with G(0) = 1, so the non-zero root lies on the side where G
    // initially drops below 1.
    const double side = result.slope_at_zero < 0.0 ? 1.0 : -1.0;
    double range = search.range;
    double lo = 0.0, hi = 0.0;
    bool found = false;
    bool overflow = false;
    for (int attempt = 0; attempt <= search.max_extensions && !found && !overflow; ++attempt) {
        const int points = std::max(search.grid_points / 2, 2);
        double prev_eps = side * search.exclusion;
        bool ok = false;
        double prev = excess(prev_eps, ok);
        for (int k = 1; k <= points && ok; ++k) {
            const double eps = side * (search.exclusion +
                                       (range - search.exclusion) * k / static_cast<double>(points));
            const double cur = excess(eps, ok);
            if (!ok) {
                overflow = true;
                break;
            }
            if ((prev < 0.0) != (cur < 0.0) || cur == 0.0) {
                lo = prev_eps;
                hi = eps;
                found = true;
                break;
            }
            prev = cur;
            prev_eps = eps;
        }
        range *= 2.0;
    }
    if (!found)
        throw NoRootInRange("find_epsilon: no sign change of G - 1 in |eps| <= " +
                            std::to_string(range / 2.0) + " (G'(0) = " +
                            std::to_string(result.slope_at_zero) + ")");

    bool ok = true;
    double f_lo = excess(lo, ok);
    double mid = 0.5 * (lo + hi);
    double f_mid = excess(mid, ok);
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        f_mid = excess(mid, ok);
        if (std::abs(f_mid) <= search.value_tol && std::abs(hi - lo) <= search.interval_tol) break;
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    result.status = EpsilonResult::Status::Root;
    result.epsilon = mid;
    result.residual = f_mid;
    return result;
}

double estimate_asymptotic_p_up(std::span<const TpmTally> schedule, double n_sigma) {
    if (schedule.empty()) throw DomainError("estimate_asymptotic_p_up: empty schedule");
    const std::size_t tail = std::max<std::size_t>(1, schedule.size() / 4);
    TpmTally pooled;
    for (std::size_t k = schedule.size() - tail; k < schedule.size(); ++k) pooled += schedule[k];
    const ConditionalProbs c = conditional_probs(pooled);
    const double gap = std::abs(c.p_up_given_up - c.p_up_given_down);
    const double sigma = std::hypot(c.se_up_given_up, c.se_up_given_down);
    if (gap > n_sigma * sigma)
        throw StillTransient("P(up|up) = " + std::to_string(c.p_up_given_up) +
                             " and P(up|down) = " + std::to_string(c.p_up_given_down) +
                             " differ by more than " + std::to_string(n_sigma) + " sigma");
    const double hits = static_cast<double>(pooled.count(Energy::Up, Energy::Up) +
                                            pooled.count(Energy::Down, Energy::Up));
    return hits / static_cast<double>(pooled.total());
}

double zero_mean_initial_p_up(double p_up_given_up, double p_up_given_down) {
    const double denom = 1.0 - p_up_given_up + p_up_given_down;
    if (!(denom > 0.0)) throw DomainError("zero_mean_initial_p_up: degenerate conditionals");
    return p_up_given_down / denom;
}

TpmTally resample(const TpmTally& tally, StreamRng& rng) {
    TpmTally out;
    std::int64_t remaining = tally.total();
    double mass_left = static_cast<double>(remaining);
    const std::array<std::int64_t, 4> cells = {tally.counts[0][0], tally.counts[0][1],
                                               tally.counts[1][0], tally.counts[1][1]};
    for (int c = 0; c < 4; ++c) {
        std::int64_t draw = remaining;
        if (c < 3) {
            const double p = mass_left > 0.0 ? std::min(1.0, cells[c] / mass_left) : 0.0;
            std::binomial_distribution<std::int64_t> binom(remaining, p);
            draw = binom(rng);
        }
        out.counts[c / 2][c % 2] = draw;
        remaining -= draw;
        mass_left -= static_cast<double>(cells[c]);
    }
    return out;
}

namespace {

double pooled_p_up(const TpmTally& t) {
    return static_cast<double>(t.count(Energy::Up, Energy::Up) + t.count(Energy::Down, Energy::Up)) /
           static_cast<double>(t.total());
}

double g_for(const TpmTally& tally, double p_up_initial, double p_up_asymptotic, double omega) {
    const double delta_beta =
        effective_beta(p_up_initial, omega).beta - effective_beta(p_up_asymptotic, omega).beta;
    return characteristic_g(delta_e_distribution(tally, p_up_initial, omega), delta_beta);
}

double replicate_g(const TpmTally& tally, double p_up_initial, double p_up_asymptotic,
                   double omega, const ExchangeOptions& options, const TpmTally* asymptote,
                   int b) {
    StreamRng rng(options.seed, static_cast<std::uint64_t>(b));
    const TpmTally sample = resample(tally, rng);
    double p_inf = p_up_asymptotic;
    if (asymptote != nullptr) p_inf = pooled_p_up(resample(*asymptote, rng));
    return g_for(sample, p_up_initial, p_inf, omega);
}

double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(k);
    if (k + 1 >= sorted.size()) return sorted.back();
    return sorted[k] + frac * (sorted[k + 1] - sorted[k]);
}

} // namespace

std::vector<double> bootstrap_g_serial(const TpmTally& tally, double p_up_initial,
                                       double p_up_asymptotic, double omega,
                                       const ExchangeOptions& options, const TpmTally* asymptote) {
    std::vector<double> out(static_cast<std::size_t>(options.n_bootstrap));
    for (int b = 0; b < options.n_bootstrap; ++b)
        out[b] = replicate_g(tally, p_up_initial, p_up_asymptotic, omega, options, asymptote, b);
    return out;
}

std::vector<double> bootstrap_g(const TpmTally& tally, double p_up_initial,
                                double p_up_asymptotic, double omega,
                                const ExchangeOptions& options, const TpmTally* asymptote) {
    std::vector<double> out(static_cast<std::size_t>(options.n_bootstrap));
#pragma omp parallel for schedule(static)
    for (int b = 0; b < options.n_bootstrap; ++b)
        out[b] = replicate_g(tally, p_up_initial, p_up_asymptotic, omega, options, asymptote, b);
    return out;
}

ExchangeCheck verify_exchange_relation(const TpmTally& tally, double p_up_initial,
                                       double p_up_asymptotic, double omega,
                                       const ExchangeOptions& options, const TpmTally* asymptote) {
    if (tally.total() == 0) throw DomainError("verify_exchange_relation: empty tally");
    if (options.n_bootstrap < 1000)
        throw DomainError("verify_exchange_relation: at least 1000 bootstrap replicates required");
    if (!(options.ci_level > 0.0 && options.ci_level < 1.0))
        throw DomainError("verify_exchange_relation: ci_level must lie in (0, 1)");

    if (asymptote != nullptr) {
        const TpmTally late[] = {*asymptote};
        estimate_asymptotic_p_up(late);
    }

    ExchangeCheck check;
    check.p_up_asymptotic = p_up_asymptotic;
    check.delta_beta =
        effective_beta(p_up_initial, omega).beta - effective_beta(p_up_asymptotic, omega).beta;
    check.g = g_for(tally, p_up_initial, p_up_asymptotic, omega);

    std::vector<double> reps =
        bootstrap_g(tally, p_up_initial, p_up_asymptotic, omega, options, asymptote);
    std::sort(reps.begin(), reps.end());
    const double tail = 0.5 * (1.0 - options.ci_level);
    check.ci_low = quantile(reps, tail);
    check.ci_high = quantile(reps, 1.0 - tail);
    check.pass = check.ci_low <= 1.0 && 1.0 <= check.ci_high &&
                 std::abs(check.g - 1.0) <= options.tolerance;
    return check;
}

} // namespace openqfr

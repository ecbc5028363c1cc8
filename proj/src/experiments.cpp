#include "openqfr/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "openqfr/analytic.hpp"
#include "openqfr/fluctuation.hpp"
#include "openqfr/nv_model.hpp"
#include "openqfr/qubit_protocol.hpp"
#include "openqfr/three_level.hpp"

namespace openqfr::cli {

namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

// Reads keys from one JSON object, remembering which were consumed so that
// leftovers can be rejected.
class Section {
public:
    Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw SchemaError(where() + ": expected an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }
    /// Marks a key validated elsewhere as known.
    void mark(const std::string& key) { used_.insert(key); }

    std::optional<double> opt_number(const std::string& key) {
        used_.insert(key);
        if (!obj_.contains(key)) return std::nullopt;
        const json& v = obj_.at(key);
        if (!v.is_number()) throw SchemaError(name(key) + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw SchemaError(name(key) + ": must be finite");
        return d;
    }

    double number(const std::string& key, double fallback) {
        return opt_number(key).value_or(fallback);
    }

    double number_in(const std::string& key, double fallback, double lo, double hi) {
        const double d = number(key, fallback);
        if (d < lo || d > hi)
            throw SchemaError(name(key) + ": must lie in [" + fmt(lo) + ", " + fmt(hi) + "]");
        return d;
    }

    double positive(const std::string& key, double fallback) {
        const double d = number(key, fallback);
        if (!(d > 0.0)) throw SchemaError(name(key) + ": must be positive");
        return d;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo,
                         std::int64_t hi) {
        used_.insert(key);
        if (!obj_.contains(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_number_integer()) throw SchemaError(name(key) + ": expected an integer");
        const auto i = v.get<std::int64_t>();
        if (i < lo || i > hi)
            throw SchemaError(name(key) + ": must lie in [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
        return i;
    }

    std::string choice(const std::string& key, const std::string& fallback,
                       const std::vector<std::string>& allowed) {
        used_.insert(key);
        if (!obj_.contains(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_string()) throw SchemaError(name(key) + ": expected a string");
        const auto s = v.get<std::string>();
        for (const auto& a : allowed)
            if (s == a) return s;
        std::string msg = name(key) + ": must be one of";
        for (const auto& a : allowed) msg += " \"" + a + "\"";
        throw SchemaError(msg);
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        used_.insert(key);
        if (!obj_.contains(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_array() || v.empty()) throw SchemaError(name(key) + ": expected a non-empty array");
        std::vector<double> out;
        for (const json& e : v) {
            if (!e.is_number() || !std::isfinite(e.get<double>()))
                throw SchemaError(name(key) + ": entries must be finite numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<int> integers(const std::string& key, std::vector<int> fallback, int lo, int hi) {
        used_.insert(key);
        if (!obj_.contains(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_array() || v.empty()) throw SchemaError(name(key) + ": expected a non-empty array");
        std::vector<int> out;
        for (const json& e : v) {
            if (!e.is_number_integer()) throw SchemaError(name(key) + ": entries must be integers");
            const auto i = e.get<std::int64_t>();
            if (i < lo || i > hi)
                throw SchemaError(name(key) + ": entries must lie in [" + std::to_string(lo) +
                                  ", " + std::to_string(hi) + "]");
            out.push_back(static_cast<int>(i));
        }
        return out;
    }

    Section child(const std::string& key) {
        used_.insert(key);
        static const json empty = json::object();
        return Section(obj_.contains(key) ? obj_.at(key) : empty, name(key));
    }

    /// Rejects keys that were never read.
    void finish() const {
        for (const auto& [key, value] : obj_.items())
            if (!used_.count(key)) throw SchemaError(name(key) + ": unknown key");
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }
    static std::string fmt(double d) {
        std::ostringstream os;
        os << d;
        return os.str();
    }

    const json& obj_;
    std::string path_;
    std::set<std::string> used_;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) { line(header); }

    void row(const std::vector<std::string>& cells) { line(cells); }
    std::string str() const { return os_.str(); }

private:
    void line(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) os_ << (k ? "," : "") << cells[k];
        os_ << '\n';
    }
    std::ostringstream os_;
};

const char* label(Energy e) { return e == Energy::Up ? "up" : "down"; }

// Qubit drive and pulse timing shared by the two-level experiments.
struct QubitSetup {
    QubitHamiltonian h;
    double tau = 0.0;
    json resolved;
};

QubitSetup read_qubit(Section& s, double alpha_over_pi, double omega_tau_over_pi) {
    const std::string units = s.choice("units", "omega", {"omega", "MHz"});
    const double scale = units == "MHz" ? 2.0 * kPi : 1.0;
    QubitSetup q;
    if (s.has("drive")) {
        if (s.has("alpha_over_pi") || s.has("omega"))
            throw SchemaError(s.name("drive") + ": conflicts with alpha_over_pi/omega");
        Section d = s.child("drive");
        const double detuning = d.number("detuning", 0.0) * scale;
        const double rabi = d.positive("rabi", 1.0) * scale;
        d.finish();
        q.h = QubitHamiltonian::from_drive(detuning, rabi);
    } else {
        q.h.alpha = kPi * s.number_in("alpha_over_pi", alpha_over_pi, 0.0, 1.0);
        q.h.omega = s.positive("omega", 1.0) * scale;
    }
    if (s.has("tau") && s.has("omega_tau_over_pi"))
        throw SchemaError(s.name("tau") + ": give either tau or omega_tau_over_pi");
    if (s.has("tau")) {
        q.tau = s.positive("tau", 1.0);
        s.opt_number("omega_tau_over_pi");
    } else {
        s.opt_number("tau");
        q.tau = kPi * s.positive("omega_tau_over_pi", omega_tau_over_pi) / q.h.omega;
    }
    q.resolved = {{"units", units}, {"alpha", q.h.alpha}, {"omega", q.h.omega}, {"tau", q.tau}};
    return q;
}

ProtocolConfig read_protocol(Section& s, const QubitSetup& q, double p_abs, double p_up_initial,
                             std::int64_t n_traj) {
    ProtocolConfig cfg;
    cfg.hamiltonian = q.h;
    cfg.tau = q.tau;
    cfg.p_abs = s.number_in("p_abs", p_abs, 0.0, 1.0);
    cfg.p_diss = s.number_in("p_diss", 0.44, 0.0, 1.0);
    cfg.readout_flip = s.number_in("readout_flip", 0.0, 0.0, 0.999999);
    cfg.p_up_initial = s.number_in("p_up_initial", p_up_initial, 1e-12, 1.0 - 1e-12);
    cfg.n_traj = s.integer("n_traj", n_traj, 1, 1'000'000'000);
    cfg.tail_time = s.number("tail_time", 0.0);
    if (cfg.tail_time < 0.0) throw SchemaError(s.name("tail_time") + ": must be non-negative");
    return cfg;
}

json protocol_json(const ProtocolConfig& cfg) {
    return {{"p_abs", cfg.p_abs},           {"p_diss", cfg.p_diss},
            {"readout_flip", cfg.readout_flip}, {"p_up_initial", cfg.p_up_initial},
            {"n_traj", cfg.n_traj},         {"tail_time", cfg.tail_time}};
}

nv::NvRates read_rates(Section& parent) {
    Section s = parent.child("rates");
    nv::NvRates r;
    r.gamma_eg = s.positive("gamma_eg", r.gamma_eg);
    r.gamma_1m = s.number_in("gamma_1m", r.gamma_1m, 0.0, 1e6);
    r.gamma_0m = s.number_in("gamma_0m", r.gamma_0m, 0.0, 1e6);
    r.gamma_m0 = s.number_in("gamma_m0", r.gamma_m0, 0.0, 1e6);
    r.gamma_m1 = s.number_in("gamma_m1", r.gamma_m1, 0.0, 1e6);
    r.theta = s.number_in("theta", r.theta, 0.0, 1.5);
    r.p_abs_optical = s.number_in("p_abs_optical", r.p_abs_optical, 0.0, 1.0);
    s.finish();
    return r;
}

json rates_json(const nv::NvRates& r) {
    return {{"gamma_eg", r.gamma_eg}, {"gamma_1m", r.gamma_1m}, {"gamma_0m", r.gamma_0m},
            {"gamma_m0", r.gamma_m0}, {"gamma_m1", r.gamma_m1}, {"theta", r.theta},
            {"p_abs_optical", r.p_abs_optical}};
}

void require_mhz(Section& s) {
    s.choice("units", "MHz", {"MHz"});
}

using Job = std::function<std::vector<OutputFile>()>;

struct Prepared {
    json resolved;
    Job job;
};

// ---------------------------------------------------------------------------

Prepared prepare_conditionals(Section& s, std::uint64_t seed) {
    const QubitSetup q = read_qubit(s, 0.5, 5.0 / 3.0);
    const ProtocolConfig base = read_protocol(s, q, 0.18, 0.5, 100'000);
    const std::vector<int> counts =
        s.integers("pulse_counts", {0, 1, 2, 3, 5, 10, 20, 40, 60, 80}, 0, 100'000);

    json resolved = q.resolved;
    resolved.update(protocol_json(base));
    resolved["pulse_counts"] = counts;

    Job job = [=] {
        Csv cond({"n_pulses", "p_up_given_up", "se_up_given_up", "p_up_given_down",
                  "se_up_given_down", "exact_up_given_up", "exact_up_given_down"});
        Csv tallies({"n_pulses", "initial", "final", "count"});
        for (int n : counts) {
            ProtocolConfig cfg = base;
            cfg.n_pulses = n;
            cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(n));
            const TpmTally t = run_batch(cfg);
            const ConditionalProbs p = conditional_probs(t);
            const auto exact = expected_conditionals(cfg);
            cond.row({std::to_string(n), num(p.p_up_given_up), num(p.se_up_given_up),
                      num(p.p_up_given_down), num(p.se_up_given_down), num(exact[0]),
                      num(exact[1])});
            for (Energy i : {Energy::Up, Energy::Down})
                for (Energy f : {Energy::Up, Energy::Down})
                    tallies.row({std::to_string(n), label(i), label(f), std::to_string(t.count(i, f))});
        }
        return std::vector<OutputFile>{{"conditionals.csv", cond.str()}, {"tally.csv", tallies.str()}};
    };
    return {resolved, job};
}

Prepared prepare_exchange(Section& s, std::uint64_t seed) {
    const QubitSetup q = read_qubit(s, 1.0 / 3.0, 5.0 / 3.0);
    const ProtocolConfig base = read_protocol(s, q, 0.18, 1.0 / (1.0 + std::numbers::e), 100'000);
    const std::vector<int> counts = s.integers("pulse_counts", {10, 20, 40, 80}, 0, 100'000);
    const int asymptote_pulses = static_cast<int>(s.integer("asymptote_pulses", 200, 1, 100'000));
    ExchangeOptions opts;
    opts.n_bootstrap = static_cast<int>(s.integer("n_bootstrap", 1000, 1000, 1'000'000));
    opts.ci_level = s.number_in("ci_level", 0.99, 0.5, 0.9999);
    opts.tolerance = s.positive("tolerance", 0.05);

    json resolved = q.resolved;
    resolved.update(protocol_json(base));
    resolved["pulse_counts"] = counts;
    resolved["asymptote_pulses"] = asymptote_pulses;
    resolved["n_bootstrap"] = opts.n_bootstrap;
    resolved["ci_level"] = opts.ci_level;
    resolved["tolerance"] = opts.tolerance;

    Job job = [=] {
        ProtocolConfig late = base;
        late.n_pulses = asymptote_pulses;
        late.seed = derive_seed(seed, 0xA5A5'0000ULL);
        const TpmTally asym = run_batch(late);
        const TpmTally schedule[] = {asym};
        const double p_inf = estimate_asymptotic_p_up(schedule);

        Csv out({"n_pulses", "G", "ci_low", "ci_high", "delta_beta_eff_x_omega", "p_up_inf", "pass"});
        Csv tallies({"n_pulses", "initial", "final", "count"});
        for (int n : counts) {
            ProtocolConfig cfg = base;
            cfg.n_pulses = n;
            cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(n));
            const TpmTally t = run_batch(cfg);
            ExchangeOptions o = opts;
            o.seed = derive_seed(seed, 0xB0B0'0000ULL + static_cast<std::uint64_t>(n));
            const ExchangeCheck c =
                verify_exchange_relation(t, cfg.p_up_initial, p_inf, cfg.hamiltonian.omega, o, &asym);
            out.row({std::to_string(n), num(c.g), num(c.ci_low), num(c.ci_high),
                     num(c.delta_beta * cfg.hamiltonian.omega), num(c.p_up_asymptotic),
                     c.pass ? "1" : "0"});
            for (Energy i : {Energy::Up, Energy::Down})
                for (Energy f : {Energy::Up, Energy::Down})
                    tallies.row({std::to_string(n), label(i), label(f), std::to_string(t.count(i, f))});
        }
        return std::vector<OutputFile>{{"exchange_relation.csv", out.str()},
                                       {"tally.csv", tallies.str()}};
    };
    return {resolved, job};
}

Prepared prepare_pl(Section& s, std::uint64_t) {
    require_mhz(s);
    const nv::NvRates rates = read_rates(s);
    const double t_max = s.positive("t_max", 2.0);
    const int n_points = static_cast<int>(s.integer("n_points", 201, 2, 100'000));
    json resolved = {{"units", "MHz"}, {"rates", rates_json(rates)}, {"t_max", t_max},
                     {"n_points", n_points}};

    Job job = [=] {
        std::vector<double> grid(n_points);
        for (int k = 0; k < n_points; ++k) grid[k] = t_max * k / (n_points - 1);
        const auto g0 = nv::simulate_pl(rates, DensityMatrix::basis(nv::kNvDim, nv::index(nv::NvLevel::G0)), grid);
        const auto g1 = nv::simulate_pl(rates, DensityMatrix::basis(nv::kNvDim, nv::index(nv::NvLevel::GPlus)), grid);
        const double norm = nv::radiative_rate(rates, steady_state(nv::build_seven_level_model(rates, true)));
        Csv out({"t_us", "pl_g0", "pl_g1"});
        for (int k = 0; k < n_points; ++k) out.row({num(grid[k]), num(g0[k] / norm), num(g1[k] / norm)});
        return std::vector<OutputFile>{{"pl_curves.csv", out.str()}};
    };
    return {resolved, job};
}

Prepared prepare_model_comparison(Section& s, std::uint64_t) {
    require_mhz(s);
    const nv::NvRates rates = read_rates(s);
    Section d = s.child("drive");
    const double rabi = d.positive("rabi", 1.3) * 2.0 * kPi;
    const double detuning = d.number("detuning", -1.3) * 2.0 * kPi;
    d.finish();
    const QubitHamiltonian h = QubitHamiltonian::from_drive(detuning, rabi);
    const double tau = s.positive("tau", 2.0 * kPi / h.omega);
    const double t_l = s.positive("t_l", 0.041);
    const int n_pulses = static_cast<int>(s.integer("n_pulses", 20, 1, 10'000));
    const double p_diss = s.number_in("p_diss", 0.44, 0.0, 1.0);
    const double flip_default = std::pow(std::tan(rates.theta), 2);
    const double readout_flip = s.number_in("readout_flip", flip_default, 0.0, 0.999999);
    const std::vector<double> scan = s.numbers("p_abs_optical_scan", {0.2, 0.3, 0.45});
    for (double p : scan)
        if (!(p >= 0.0 && p <= 1.0))
            throw SchemaError(s.name("p_abs_optical_scan") + ": entries must lie in [0, 1]");

    json resolved = {{"units", "MHz"}, {"rates", rates_json(rates)},
                     {"drive", {{"rabi", rabi / (2 * kPi)}, {"detuning", detuning / (2 * kPi)}}},
                     {"tau", tau}, {"t_l", t_l}, {"n_pulses", n_pulses}, {"p_diss", p_diss},
                     {"readout_flip", readout_flip}, {"p_abs_optical_scan", scan}};

    Job job = [=] {
        nv::PulsedProtocol7 protocol{h, tau, t_l, n_pulses, true};
        ProtocolConfig two;
        two.hamiltonian = h;
        two.tau = tau;
        two.n_pulses = n_pulses;
        two.p_diss = p_diss;
        two.readout_flip = readout_flip;
        auto family = [&](double p) { return nv::two_level_curves(two, p); };

        Csv fits({"p_abs_optical", "p_abs_eff", "linf_distance", "boundary"});
        for (double p : scan) {
            nv::NvRates r = rates;
            r.p_abs_optical = p;
            const nv::EffectiveFit f =
                nv::fit_effective_p_abs(nv::simulate_pulsed_protocol_7l(r, protocol), family);
            fits.row({num(p), num(f.p_abs), num(f.distance), f.boundary || f.flat ? "1" : "0"});
        }

        const nv::PulsedCurves seven = nv::simulate_pulsed_protocol_7l(rates, protocol);
        const nv::EffectiveFit fit = nv::fit_effective_p_abs(seven, family);
        const nv::PulsedCurves raw = family(rates.p_abs_optical);
        const nv::PulsedCurves eff = family(fit.p_abs);
        Csv cmp({"k", "t_us", "initial", "p_cond_7l", "p_cond_2l_raw", "p_cond_2l_eff"});
        for (int k = 0; k <= n_pulses; ++k) {
            cmp.row({std::to_string(k), num(seven.t[k]), "up", num(seven.p_up_given_up[k]),
                     num(raw.p_up_given_up[k]), num(eff.p_up_given_up[k])});
            cmp.row({std::to_string(k), num(seven.t[k]), "down", num(seven.p_up_given_down[k]),
                     num(raw.p_up_given_down[k]), num(eff.p_up_given_down[k])});
        }
        return std::vector<OutputFile>{{"comparison.csv", cmp.str()}, {"effective_fit.csv", fits.str()}};
    };
    return {resolved, job};
}

Prepared prepare_mu_scan(Section& s, std::uint64_t seed) {
    QubitSetup q = read_qubit(s, 1.0 / 3.0, 1.0);
    if (s.has("tau") || s.has("omega_tau_over_pi"))
        throw SchemaError(s.name("tau") + ": mu-scan sets tau from its scan range");
    const ProtocolConfig base = read_protocol(s, q, 0.45, 0.5, 20'000);
    const double lo = s.positive("omega_tau_min_over_pi", 0.2);
    const double hi = s.positive("omega_tau_max_over_pi", 4.0);
    if (!(hi > lo)) throw SchemaError(s.name("omega_tau_max_over_pi") + ": must exceed the minimum");
    const int n_points = static_cast<int>(s.integer("n_points", 40, 2, 10'000));
    const int n_mu = static_cast<int>(s.integer("mu_eff_pulses", 100, 1, 100'000));
    const int mc_pulses = static_cast<int>(s.integer("mc_pulses", 100, 1, 100'000));
    if (base.p_abs <= 0.0) throw SchemaError(s.name("p_abs") + ": must be positive for mu-scan");

    json resolved = q.resolved;
    resolved.erase("tau");
    resolved.update(protocol_json(base));
    resolved.update({{"omega_tau_min_over_pi", lo}, {"omega_tau_max_over_pi", hi},
                     {"n_points", n_points}, {"mu_eff_pulses", n_mu}, {"mc_pulses", mc_pulses}});

    Job job = [=] {
        const double g = analytic::gamma_d_tl_from_p_diss(base.p_diss);
        const double alpha = base.hamiltonian.alpha;
        const double omega = base.hamiltonian.omega;
        Csv out({"alpha", "omega_tau", "p_abs", "mu", "mu_eff", "p_up_inf", "p_up_mc", "se_mc"});
        for (int k = 0; k < n_points; ++k) {
            const double wt = kPi * (lo + (hi - lo) * k / (n_points - 1));
            ProtocolConfig cfg = base;
            cfg.tau = wt / omega;
            cfg.n_pulses = mc_pulses;
            cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(k));
            const double mu_eff = analytic::effective_mu(cfg.p_abs, n_mu, alpha, omega, cfg.tau);
            const double p_inf = analytic::asymptotic_p_up(alpha, mu_eff, g);
            const TpmTally t = run_batch(cfg);
            const double n = static_cast<double>(t.total());
            const double p_mc = (t.count(Energy::Up, Energy::Up) + t.count(Energy::Down, Energy::Up)) / n;
            out.row({num(alpha), num(wt), num(cfg.p_abs), num(analytic::mu(alpha, omega, cfg.tau)),
                     num(mu_eff), num(p_inf), num(p_mc), num(std::sqrt(p_mc * (1 - p_mc) / n))});
        }
        return std::vector<OutputFile>{{"mu_scan.csv", out.str()}};
    };
    return {resolved, job};
}

Prepared prepare_3ls(Section& s, std::uint64_t) {
    three_level::ThreeLevelParams base;
    base.omega12 = s.positive("omega12", 1.0);
    base.gamma = s.positive("gamma", 1.5);
    base.beta_init = s.number("beta", 1.0);
    base.dissipator_weight = s.positive("dissipator_weight", 2.0);
    const std::vector<double> omega13 = s.numbers("omega13", three_level::kReferenceOmega13);
    for (double w : omega13)
        if (!(w >= 0.0)) throw SchemaError(s.name("omega13") + ": entries must be non-negative");
    const double t_max = s.number_in("t_max", 80.0, 1e-9, 80.0);
    const int n_t = static_cast<int>(s.integer("n_t", 161, 2, 100'000));
    const double surface_max = s.positive("surface_omega13_max", 3.0);
    const int surface_n = static_cast<int>(s.integer("surface_n_omega13", 30, 1, 10'000));
    const double eta_max = s.positive("eta_max", 1.1);
    const int n_eta = static_cast<int>(s.integer("n_eta", 300, 2, 100'000));

    json resolved = {{"omega12", base.omega12}, {"gamma", base.gamma}, {"beta", base.beta_init},
                     {"dissipator_weight", base.dissipator_weight}, {"omega13", omega13},
                     {"t_max", t_max}, {"n_t", n_t}, {"surface_omega13_max", surface_max},
                     {"surface_n_omega13", surface_n}, {"eta_max", eta_max}, {"n_eta", n_eta}};

    Job job = [=] {
        std::vector<double> eta(n_eta), t_grid(n_t);
        for (int k = 0; k < n_eta; ++k) eta[k] = eta_max * k / (n_eta - 1);
        for (int k = 0; k < n_t; ++k) t_grid[k] = t_max * k / (n_t - 1);

        auto zero_count = [&](const three_level::ThreeLevelSystem& sys, const RealVector& p,
                              const RealMatrix& cond) {
            std::vector<double> g(n_eta);
            for (int k = 0; k < n_eta; ++k) g[k] = three_level::g_of_eta(sys.energies, p, cond, eta[k]);
            return three_level::count_zeros(g, 1e-12);
        };

        Csv trace({"omega13", "t", "eta_root", "status", "g_zero_count"});
        Csv plateaus({"omega13", "epsilon_final", "settled_t", "row_equality_error"});
        for (double w : omega13) {
            three_level::ThreeLevelParams p = base;
            p.omega13 = w;
            const auto sys = three_level::build_3ls(p);
            const RealVector p0 = three_level::initial_thermal_state(sys).populations;
            const auto tr = three_level::epsilon_trace(sys, p0, t_grid);
            for (std::size_t k = 0; k < tr.t.size(); ++k) {
                const RealMatrix cond = three_level::tpm_conditionals_3ls(sys, tr.t[k]);
                trace.row({num(w), num(tr.t[k]), tr.epsilon[k] ? num(*tr.epsilon[k]) : "",
                           tr.note[k], std::to_string(zero_count(sys, p0, cond))});
            }
            const RealMatrix final_cond = three_level::tpm_conditionals_3ls(sys, t_max);
            double row_err = 0.0;
            for (int i = 1; i < 3; ++i)
                row_err = std::max(row_err, (final_cond.row(i) - final_cond.row(0)).cwiseAbs().maxCoeff());
            plateaus.row({num(w), tr.epsilon.back() ? num(*tr.epsilon.back()) : "",
                          tr.settled_from >= 0 ? num(tr.t[tr.settled_from]) : "", num(row_err)});
        }

        Csv surface({"omega13", "eta", "g"});
        for (int m = 1; m <= surface_n; ++m) {
            three_level::ThreeLevelParams p = base;
            p.omega13 = surface_max * m / surface_n;
            const auto sys = three_level::build_3ls(p);
            const RealVector p0 = three_level::initial_thermal_state(sys).populations;
            const RealMatrix cond = three_level::tpm_conditionals_3ls(sys, t_max);
            for (double e : eta)
                surface.row({num(p.omega13), num(e), num(three_level::g_of_eta(sys.energies, p0, cond, e))});
        }
        return std::vector<OutputFile>{{"epsilon_trace.csv", trace.str()},
                                       {"plateaus.csv", plateaus.str()},
                                       {"surface.csv", surface.str()}};
    };
    return {resolved, job};
}

Prepared prepare_analytic(Section& s, std::uint64_t seed) {
    const int n_alpha = static_cast<int>(s.integer("n_alpha", 20, 2, 1000));
    const int n_omega_tau = static_cast<int>(s.integer("n_omega_tau", 20, 2, 1000));
    const std::vector<int> n_list = s.integers("n_list", {1, 2, 5, 17, 64}, 1, 10'000);
    const int n_random = static_cast<int>(s.integer("n_random", 10, 1, 10'000));
    const int n_max = static_cast<int>(s.integer("n_max", 50, 1, 10'000));
    const int n_limit = static_cast<int>(s.integer("n_limit", 5000, 1, 10'000'000));

    json resolved = {{"n_alpha", n_alpha}, {"n_omega_tau", n_omega_tau}, {"n_list", n_list},
                     {"n_random", n_random}, {"n_max", n_max}, {"n_limit", n_limit}};

    Job job = [=] {
        Csv superop({"alpha", "omega_tau", "n", "max_abs_diff"});
        for (int a = 0; a < n_alpha; ++a)
            for (int w = 0; w < n_omega_tau; ++w)
                for (int n : n_list) {
                    analytic::AnalyticParams p;
                    p.alpha = kPi * a / (n_alpha - 1);
                    p.tau = 4.0 * kPi * w / (n_omega_tau - 1);
                    p.n = n;
                    const double diff =
                        max_abs_diff(analytic::composed_superop_closed_form(p).matrix,
                                     analytic::composed_superop_direct(p).matrix);
                    superop.row({num(p.alpha), num(p.tau), std::to_string(n), num(diff)});
                }

        Csv diss({"set", "alpha", "omega_tau", "gamma_d_tl", "n", "initial", "final", "p_closed",
                  "p_direct", "abs_diff"});
        Csv limit({"set", "alpha", "omega_tau", "gamma_d_tl", "p_up_inf", "p_closed_up", "p_closed_down"});
        for (int set = 0; set < n_random; ++set) {
            StreamRng rng(seed, static_cast<std::uint64_t>(set));
            analytic::AnalyticParams p;
            p.alpha = 0.1 + (kPi - 0.2) * rng.uniform();
            p.tau = 4.0 * kPi * rng.uniform();
            p.gamma_d_tl = 0.05 + 1.95 * rng.uniform();
            for (int n = 1; n <= n_max; ++n) {
                p.n = n;
                for (Energy i : {Energy::Up, Energy::Down})
                    for (Energy f : {Energy::Up, Energy::Down}) {
                        const double c = analytic::conditional_prob_closed_form(p, i, f);
                        const double d = analytic::conditional_prob_direct(p, i, f);
                        diss.row({std::to_string(set), num(p.alpha), num(p.tau), num(p.gamma_d_tl),
                                  std::to_string(n), label(i), label(f), num(c), num(d),
                                  num(std::abs(c - d))});
                    }
            }
            p.n = n_limit;
            const double mu = analytic::mu(p.alpha, p.omega, p.tau);
            limit.row({std::to_string(set), num(p.alpha), num(p.tau), num(p.gamma_d_tl),
                       num(analytic::asymptotic_p_up(p.alpha, mu, p.gamma_d_tl)),
                       num(analytic::conditional_prob_closed_form(p, Energy::Up, Energy::Up)),
                       num(analytic::conditional_prob_closed_form(p, Energy::Down, Energy::Up))});
        }
        return std::vector<OutputFile>{{"superop_check.csv", superop.str()},
                                       {"dissipative_check.csv", diss.str()},
                                       {"asymptote_check.csv", limit.str()}};
    };
    return {resolved, job};
}

using Preparer = Prepared (*)(Section&, std::uint64_t);

const std::map<std::string, Preparer>& preparers() {
    static const std::map<std::string, Preparer> table = {
        {"fig3-conditionals", prepare_conditionals}, {"fig4-exchange", prepare_exchange},
        {"pl-curves", prepare_pl},           {"model-comparison", prepare_model_comparison},
        {"mu-scan", prepare_mu_scan},        {"3ls-study", prepare_3ls},
        {"analytic-check", prepare_analytic},
    };
    return table;
}

std::vector<std::string> experiment_names() {
    std::vector<std::string> names;
    for (const auto& info : experiment_catalog()) names.push_back(info.name);
    return names;
}

Prepared prepare(const json& config, std::optional<std::uint64_t> seed_override,
                 std::string& experiment, std::uint64_t& seed) {
    Section top(config, "");
    experiment = top.choice("experiment", "", experiment_names());
    if (experiment.empty()) throw SchemaError("experiment: required key missing");
    if (top.has("seed")) {
        const json& v = config.at("seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw SchemaError("seed: expected a non-negative integer");
    }
    seed = top.has("seed") ? config.at("seed").get<std::uint64_t>() : 0;
    if (seed_override) seed = *seed_override;
    if (top.has("output_dir") && !config.at("output_dir").is_string())
        throw SchemaError("output_dir: expected a string");
    top.mark("seed");
    top.mark("output_dir");
    Section params = top.child("parameters");
    Prepared p;
    try {
        p = preparers().at(experiment)(params, seed);
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError(std::string("parameters: ") + e.what());
    }
    params.finish();
    top.finish();
    return p;
}

} // namespace

const std::vector<ExperimentInfo>& experiment_catalog() {
    static const std::vector<ExperimentInfo> catalog = {
        {"fig3-conditionals", "Fig. 3",
         "Monte Carlo conditional probabilities P(up|up), P(up|down) versus pulse count, with the exact expectation.",
         {{"units", "omega"}, {"alpha_over_pi", 0.5}, {"omega", 1.0}, {"omega_tau_over_pi", 5.0 / 3.0},
          {"p_abs", 0.18}, {"p_diss", 0.44}, {"readout_flip", 0.0}, {"p_up_initial", 0.5},
          {"n_traj", 100000}, {"tail_time", 0.0},
          {"pulse_counts", {0, 1, 2, 3, 5, 10, 20, 40, 60, 80}}},
         {"conditionals.csv", "tally.csv"}},
        {"fig4-exchange", "Fig. 4",
         "Exchange relation G(delta_beta_eff) with bootstrap CI per pulse count; asymptote from a long run.",
         {{"units", "omega"}, {"alpha_over_pi", 1.0 / 3.0}, {"omega", 1.0}, {"omega_tau_over_pi", 5.0 / 3.0},
          {"p_abs", 0.18}, {"p_diss", 0.44}, {"readout_flip", 0.0},
          {"p_up_initial", 1.0 / (1.0 + std::numbers::e)}, {"n_traj", 100000}, {"tail_time", 0.0},
          {"pulse_counts", {10, 20, 40, 80}}, {"asymptote_pulses", 200}, {"n_bootstrap", 1000},
          {"ci_level", 0.99}, {"tolerance", 0.05}},
         {"exchange_relation.csv", "tally.csv"}},
        {"pl-curves", "Supplemental PL figure",
         "Seven-level photoluminescence under continuous illumination from g0 and g+1.",
         {{"units", "MHz"}, {"rates", rates_json({})}, {"t_max", 2.0}, {"n_points", 201}},
         {"pl_curves.csv"}},
        {"model-comparison", "Supplemental seven-level vs two-level figure",
         "Seven-level pulsed protocol against the effective qubit model; fitted effective p_abs.",
         {{"units", "MHz"}, {"rates", rates_json({})}, {"drive", {{"rabi", 1.3}, {"detuning", -1.3}}},
          {"tau", "2 pi / omega"}, {"t_l", 0.041}, {"n_pulses", 20}, {"p_diss", 0.44},
          {"readout_flip", "tan^2 theta"}, {"p_abs_optical_scan", {0.2, 0.3, 0.45}}},
         {"comparison.csv", "effective_fit.csv"}},
        {"mu-scan", "Supplemental mu_eff figure",
         "Stochastic-limit asymptote P_up(mu_eff) against the Monte Carlo steady state over omega tau.",
         {{"units", "omega"}, {"alpha_over_pi", 1.0 / 3.0}, {"omega", 1.0}, {"p_abs", 0.45},
          {"p_diss", 0.44}, {"readout_flip", 0.0}, {"p_up_initial", 0.5}, {"n_traj", 20000},
          {"omega_tau_min_over_pi", 0.2}, {"omega_tau_max_over_pi", 4.0}, {"n_points", 40},
          {"mu_eff_pulses", 100}, {"mc_pulses", 100}},
         {"mu_scan.csv"}},
        {"3ls-study", "Appendix Fig. 5",
         "Three-level decay: epsilon(t) traces, plateaus, and the g(eta) surface at t_max.",
         {{"omega12", 1.0}, {"gamma", 1.5}, {"beta", 1.0}, {"dissipator_weight", 2.0},
          {"omega13", three_level::kReferenceOmega13}, {"t_max", 80.0}, {"n_t", 161},
          {"surface_omega13_max", 3.0}, {"surface_n_omega13", 30}, {"eta_max", 1.1}, {"n_eta", 300}},
         {"epsilon_trace.csv", "plateaus.csv", "surface.csv"}},
        {"analytic-check", "Supplemental closed-form superoperators",
         "Closed-form S and P_{j|i} against brute-force superoperator products.",
         {{"n_alpha", 20}, {"n_omega_tau", 20}, {"n_list", {1, 2, 5, 17, 64}}, {"n_random", 10},
          {"n_max", 50}, {"n_limit", 5000}},
         {"superop_check.csv", "dissipative_check.csv", "asymptote_check.csv"}},
    };
    return catalog;
}

std::string catalog_text() {
    std::ostringstream os;
    for (const auto& info : experiment_catalog()) {
        os << info.name << "  [" << info.figure << "]\n  " << info.summary << "\n  outputs:";
        for (const auto& f : info.outputs) os << ' ' << f;
        os << "\n  parameters (defaults):\n";
        for (const auto& [key, value] : info.defaults.items()) os << "    " << key << " = " << value.dump() << '\n';
        os << '\n';
    }
    return os.str();
}

json catalog_json() {
    json arr = json::array();
    for (const auto& info : experiment_catalog())
        arr.push_back({{"name", info.name}, {"figure", info.figure}, {"summary", info.summary},
                       {"defaults", info.defaults}, {"outputs", info.outputs}});
    return arr;
}

ExperimentOutput run_experiment(const json& config, std::optional<std::uint64_t> seed_override) {
    ExperimentOutput out;
    Prepared p = prepare(config, seed_override, out.experiment, out.seed);
    out.resolved_parameters = p.resolved;
    out.files = p.job();
    return out;
}

json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot read config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
}

std::filesystem::path resolve_output_dir(const json& config,
                                         const std::optional<std::filesystem::path>& override_dir) {
    if (override_dir) return *override_dir;
    if (config.is_object() && config.contains("output_dir")) {
        if (!config.at("output_dir").is_string()) throw SchemaError("output_dir: expected a string");
        return config.at("output_dir").get<std::string>();
    }
    if (config.is_object() && config.contains("experiment") && config.at("experiment").is_string())
        return std::filesystem::path("out") / config.at("experiment").get<std::string>();
    return "out";
}

void write_outputs(const ExperimentOutput& output, const std::filesystem::path& dir,
                   const json& config, int threads, double wall_seconds) {
    std::filesystem::create_directories(dir);
    json files = json::array();
    for (const auto& f : output.files) {
        std::ofstream os(dir / f.name, std::ios::binary);
        os << f.contents;
        if (!os) throw Error("failed to write " + (dir / f.name).string());
        files.push_back(f.name);
    }
    const json manifest = {
        {"experiment", output.experiment},
        {"seed", output.seed},
        {"config", config},
        {"resolved_parameters", output.resolved_parameters},
        {"files", files},
        {"threads", threads},
        {"versions",
         {{"openqfr", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"openmp", _OPENMP}}},
        {"wall_time_s", wall_seconds},
    };
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << '\n';
    if (!os) throw Error("failed to write manifest.json");
}

} // namespace openqfr::cli

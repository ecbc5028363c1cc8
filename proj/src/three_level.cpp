#include "openqfr/three_level.hpp"

#include <cmath>
#include <string>

#include "openqfr/errors.hpp"

namespace openqfr::three_level {

void ThreeLevelParams::validate() const {
    if (!(omega12 > 0.0)) throw DomainError("omega12 must be positive");
    if (!(omega13 >= 0.0)) throw DomainError("omega13 must be non-negative");
    if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
    if (!std::isfinite(beta_init)) throw DomainError("beta_init must be finite");
    if (!(dissipator_weight > 0.0)) throw DomainError("dissipator_weight must be positive");
}

ThreeLevelSystem build_3ls(const ThreeLevelParams& params) {
    params.validate();
    ComplexMatrix h = ComplexMatrix::Zero(3, 3);
    h(0, 1) = h(1, 0) = params.omega12;
    h(0, 2) = h(2, 0) = params.omega13;
    ComplexMatrix jump = ComplexMatrix::Zero(3, 3);
    jump(0, 1) = std::sqrt(params.dissipator_weight * params.gamma);
    HermitianEigensystem eig = hermitian_eigensystem(h);
    return {params, LindbladModel(h, {jump}), eig.values, eig.vectors};
}

ThermalState initial_thermal_state(const ThreeLevelSystem& sys) {
    return initial_thermal_state(sys, sys.params.beta_init);
}

ThermalState initial_thermal_state(const ThreeLevelSystem& sys, double beta) {
    if (!std::isfinite(beta)) throw DomainError("initial_thermal_state: beta must be finite");
    const RealVector& e = sys.energies;
    // Shift by the ground energy so the weights stay finite for large beta.
    RealVector w = (-beta * (e.array() - e.minCoeff())).exp();
    const RealVector p = w / w.sum();
    ComplexMatrix rho = sys.eigenvectors * p.cast<Complex>().asDiagonal() *
                        sys.eigenvectors.adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return {DensityMatrix(std::move(rho)), p};
}

RealMatrix tpm_conditionals_3ls(const ThreeLevelSystem& sys, double t) {
    if (!(t >= 0.0)) throw DomainError("tpm_conditionals_3ls: negative time");
    const Propagator prop(sys.model, t);
    const int n = sys.model.dim();
    RealMatrix cond(n, n);
    for (int i = 0; i < n; ++i) {
        const ComplexVector vi = sys.eigenvectors.col(i);
        const DensityMatrix rho_t = prop.apply(DensityMatrix::pure(vi));
        for (int j = 0; j < n; ++j) cond(i, j) = rho_t.expectation(sys.eigenvectors.col(j));
    }
    return cond;
}

RealVector steady_energy_populations(const ThreeLevelSystem& sys) {
    const DensityMatrix ss = steady_state(sys.model);
    RealVector p(sys.model.dim());
    for (int j = 0; j < sys.model.dim(); ++j) p(j) = ss.expectation(sys.eigenvectors.col(j));
    return p;
}

double g_of_eta(const RealVector& energies, const RealVector& p_initial,
                const RealMatrix& conditional, double eta) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < energies.size(); ++i)
        for (Eigen::Index j = 0; j < energies.size(); ++j) {
            const double exponent = -eta * (energies(j) - energies(i));
            if (std::abs(exponent) > 700.0) throw DomainError("g_of_eta: exponent overflows");
            acc += p_initial(i) * conditional(i, j) * std::exp(exponent);
        }
    return acc - 1.0;
}

double g_of_eta_factorized(const RealVector& energies, const RealVector& p_initial,
                           const RealVector& p_final, double eta) {
    if ((eta * energies.array()).abs().maxCoeff() > 350.0)
        throw DomainError("g_of_eta_factorized: exponent overflows");
    const double out = (p_final.array() * (-eta * energies.array()).exp()).sum();
    const double in = (p_initial.array() * (eta * energies.array()).exp()).sum();
    return out * in - 1.0;
}

int count_zeros(const std::vector<double>& values, double zero_tol) {
    int zeros = 0;
    int last_sign = 0;
    for (double v : values) {
        if (std::abs(v) <= zero_tol) {
            ++zeros;
            last_sign = 0;
            continue;
        }
        const int s = v < 0.0 ? -1 : 1;
        if (last_sign != 0 && last_sign != s) ++zeros;
        last_sign = s;
    }
    return zeros;
}

EpsilonTrace epsilon_trace(const ThreeLevelSystem& sys, const RealVector& p_initial,
                           const std::vector<double>& t_grid, double settle_tol) {
    EpsilonTrace trace;
    double prev = -1.0;
    for (double t : t_grid) {
        if (!(t >= 0.0 && t <= 80.0) || t <= prev)
            throw DomainError("epsilon_trace: time grid must be increasing within [0, 80]");
        prev = t;
    }
    EpsilonSearch search;
    for (double t : t_grid) {
        const RealMatrix cond = tpm_conditionals_3ls(sys, t);
        auto g = [&](double eta) { return g_of_eta(sys.energies, p_initial, cond, eta) + 1.0; };
        trace.t.push_back(t);
        try {
            const EpsilonResult r = find_epsilon(g, search);
            if (r.status == EpsilonResult::Status::Root) {
                trace.epsilon.emplace_back(r.epsilon);
                trace.note.emplace_back("root");
            } else {
                trace.epsilon.emplace_back(std::nullopt);
                trace.note.emplace_back("degenerate");
            }
        } catch (const NoRootInRange&) {
            trace.epsilon.emplace_back(std::nullopt);
            trace.note.emplace_back("no-root");
        }
    }
    if (!trace.epsilon.empty() && trace.epsilon.back()) {
        const double final_value = *trace.epsilon.back();
        int idx = static_cast<int>(trace.epsilon.size()) - 1;
        while (idx > 0 && trace.epsilon[idx - 1] &&
               std::abs(*trace.epsilon[idx - 1] - final_value) <= settle_tol)
            --idx;
        trace.settled_from = idx;
    }
    return trace;
}

std::vector<double> default_time_grid() {
    std::vector<double> grid(161);
    for (int k = 0; k < 161; ++k) grid[k] = 0.5 * k;
    return grid;
}

} // namespace openqfr::three_level

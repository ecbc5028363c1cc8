#pragma once

#include <vector>

#include "openqfr/linalg.hpp"

namespace openqfr {

/// Hamiltonian (hbar = 1, angular frequency) plus jump operators with their
/// rates already absorbed, L_k = sqrt(rate_k) * A_k.
class LindbladModel {
public:
    /// Throws DomainError if dimensions disagree or the Hamiltonian is not Hermitian.
    LindbladModel(ComplexMatrix hamiltonian, std::vector<ComplexMatrix> jump_ops = {});

    int dim() const { return static_cast<int>(hamiltonian_.rows()); }
    const ComplexMatrix& hamiltonian() const { return hamiltonian_; }
    const std::vector<ComplexMatrix>& jump_operators() const { return jump_ops_; }

private:
    ComplexMatrix hamiltonian_;
    std::vector<ComplexMatrix> jump_ops_;
};

/// Row-stacked GKSL generator
///   -i(H (x) I - I (x) H*) + sum_k [L_k (x) L_k* - 1/2 L_k^dag L_k (x) I - 1/2 I (x) (L_k^dag L_k)^T].
SuperOperator liouvillian(const LindbladModel& model);

enum class PropagationMethod { Exponential, RungeKutta4 };

struct PropagationOptions {
    PropagationMethod method = PropagationMethod::Exponential;
    /// RK4 step; must satisfy dt <= 0.01 / ||L||_inf.
    double dt = 0.0;
};

/// rho(t) for the time-independent model. Throws DomainError for t < 0 or an
/// RK4 step that is too large.
DensityMatrix propagate(const LindbladModel& model, const DensityMatrix& rho0, double t,
                        const PropagationOptions& options = {});

/// Largest RK4 step accepted by propagate for this model.
double max_rk4_step(const LindbladModel& model);

/// Fixed-duration propagator exp(L t), reusable across many states.
class Propagator {
public:
    Propagator(const LindbladModel& model, double t);
    explicit Propagator(SuperOperator map) : map_(std::move(map)) {}

    const SuperOperator& superoperator() const { return map_; }
    ComplexVector apply(const ComplexVector& vec_rho) const { return map_.matrix * vec_rho; }
    DensityMatrix apply(const DensityMatrix& rho) const;

private:
    SuperOperator map_;
};

/// Unique stationary state. Throws DegenerateKernel when the numerical kernel
/// (singular values below kernel_tol) is not one-dimensional.
DensityMatrix steady_state(const LindbladModel& model, double kernel_tol = 1e-10);

/// Builds a DensityMatrix from a propagated operator, removing the rounding-level
/// anti-Hermitian part; throws NumericalError if that part exceeds 1e-9.
DensityMatrix to_density_matrix(const ComplexMatrix& m);

} // namespace openqfr

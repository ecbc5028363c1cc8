#include "openqfr/lindblad.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "openqfr/errors.hpp"

namespace openqfr {

LindbladModel::LindbladModel(ComplexMatrix hamiltonian, std::vector<ComplexMatrix> jump_ops)
    : hamiltonian_(std::move(hamiltonian)), jump_ops_(std::move(jump_ops)) {
    const Eigen::Index n = hamiltonian_.rows();
    if (hamiltonian_.cols() != n || n < 1 || n > kMaxDim)
        throw DomainError("Hamiltonian must be square with dimension in [1, 9]");
    if (hermiticity_error(hamiltonian_) > 1e-12)
        throw DomainError("Hamiltonian is not Hermitian");
    for (std::size_t k = 0; k < jump_ops_.size(); ++k)
        if (jump_ops_[k].rows() != n || jump_ops_[k].cols() != n)
            throw DomainError("jump operator " + std::to_string(k) + " has wrong dimension");
}

SuperOperator liouvillian(const LindbladModel& model) {
    const int n = model.dim();
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    const Complex i{0.0, 1.0};
    const ComplexMatrix& h = model.hamiltonian();
    ComplexMatrix gen = -i * (kron(h, id) - kron(id, h.conjugate()));
    for (const auto& l : model.jump_operators()) {
        const ComplexMatrix ldl = l.adjoint() * l;
        gen += kron(l, l.conjugate()) - 0.5 * kron(ldl, id) - 0.5 * kron(id, ldl.transpose());
    }
    return SuperOperator(n, std::move(gen));
}

DensityMatrix to_density_matrix(const ComplexMatrix& m) {
    const double herm = hermiticity_error(m);
    if (!m.allFinite() || herm > 1e-9)
        throw NumericalError("propagated state lost Hermiticity (error " + std::to_string(herm) +
                             ")");
    ComplexMatrix sym = 0.5 * (m + m.adjoint());
    return DensityMatrix(std::move(sym));
}

double max_rk4_step(const LindbladModel& model) {
    const ComplexMatrix& gen = liouvillian(model).matrix;
    const double norm_inf = gen.cwiseAbs().rowwise().sum().maxCoeff();
    return norm_inf > 0.0 ? 0.01 / norm_inf : std::numeric_limits<double>::infinity();
}

namespace {

ComplexVector rk4(const ComplexMatrix& gen, ComplexVector v, double t, double dt) {
    const auto steps = static_cast<long long>(std::ceil(t / dt - 1e-12));
    const double h = steps > 0 ? t / static_cast<double>(steps) : 0.0;
    for (long long s = 0; s < steps; ++s) {
        const ComplexVector k1 = gen * v;
        const ComplexVector k2 = gen * (v + 0.5 * h * k1);
        const ComplexVector k3 = gen * (v + 0.5 * h * k2);
        const ComplexVector k4 = gen * (v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return v;
}

} // namespace

DensityMatrix propagate(const LindbladModel& model, const DensityMatrix& rho0, double t,
                        const PropagationOptions& options) {
    if (!(t >= 0.0)) throw DomainError("propagate: negative time " + std::to_string(t));
    if (rho0.dim() != model.dim()) throw DomainError("propagate: state dimension mismatch");
    if (t == 0.0) return rho0;

    const SuperOperator gen = liouvillian(model);
    const ComplexVector v0 = vectorize(rho0.matrix());
    ComplexVector v;
    switch (options.method) {
    case PropagationMethod::Exponential:
        v = matrix_exp(gen.matrix, t) * v0;
        break;
    case PropagationMethod::RungeKutta4: {
        const double limit = max_rk4_step(model);
        if (!(options.dt > 0.0) || options.dt > limit)
            throw DomainError("propagate: RK4 step " + std::to_string(options.dt) +
                              " outside (0, " + std::to_string(limit) + "]");
        v = rk4(gen.matrix, v0, t, options.dt);
        break;
    }
    }
    return to_density_matrix(devectorize(v));
}

Propagator::Propagator(const LindbladModel& model, double t)
    : map_(model.dim(), matrix_exp(liouvillian(model).matrix, t)) {
    if (!(t >= 0.0)) throw DomainError("Propagator: negative time");
}

DensityMatrix Propagator::apply(const DensityMatrix& rho) const {
    return to_density_matrix(map_.apply(rho.matrix()));
}

DensityMatrix steady_state(const LindbladModel& model, double kernel_tol) {
    const SuperOperator gen = liouvillian(model);
    Eigen::JacobiSVD<ComplexMatrix> svd(gen.matrix, Eigen::ComputeFullV);
    const RealVector& sv = svd.singularValues();
    int kernel = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) < kernel_tol) ++kernel;
    if (kernel != 1) throw DegenerateKernel(kernel);

    const ComplexVector null = svd.matrixV().col(sv.size() - 1);
    ComplexMatrix rho = devectorize(null);
    const Complex trace = rho.trace();
    if (std::abs(trace) < 1e-12)
        throw NumericalError("steady_state: kernel vector is traceless");
    rho /= trace;
    return to_density_matrix(rho);
}

} // namespace openqfr

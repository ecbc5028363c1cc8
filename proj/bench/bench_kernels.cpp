// Serial reference versus OpenMP kernels: wall time and equality of results.
#include <chrono>
#include <cstdio>
#include <numbers>

#include <omp.h>

#include "openqfr/fluctuation.hpp"
#include "openqfr/qubit_protocol.hpp"

namespace {

template <class F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main() {
    using namespace openqfr;
    ProtocolConfig cfg;
    cfg.hamiltonian = {1.0, std::numbers::pi / 3};
    cfg.tau = 5.0 * std::numbers::pi / 3.0;
    cfg.n_pulses = 80;
    cfg.p_up_initial = 1.0 / (1.0 + std::numbers::e);
    cfg.n_traj = 200'000;
    cfg.seed = 7;

    TpmTally serial, parallel;
    const double t_serial = seconds([&] { serial = run_batch_serial(cfg); });
    const double t_parallel = seconds([&] { parallel = run_batch(cfg); });
    std::printf("run_batch   threads=%d  serial %.3f s  openmp %.3f s  speedup %.2f  identical=%s\n",
                omp_get_max_threads(), t_serial, t_parallel, t_serial / t_parallel,
                serial == parallel ? "yes" : "NO");

    ExchangeOptions opts;
    opts.n_bootstrap = 20'000;
    opts.seed = 11;
    std::vector<double> bs, bp;
    const double b_serial =
        seconds([&] { bs = bootstrap_g_serial(serial, cfg.p_up_initial, 0.6, 1.0, opts); });
    const double b_parallel =
        seconds([&] { bp = bootstrap_g(serial, cfg.p_up_initial, 0.6, 1.0, opts); });
    std::printf("bootstrap   threads=%d  serial %.3f s  openmp %.3f s  speedup %.2f  identical=%s\n",
                omp_get_max_threads(), b_serial, b_parallel, b_serial / b_parallel,
                bs == bp ? "yes" : "NO");
    return serial == parallel && bs == bp ? 0 : 1;
}

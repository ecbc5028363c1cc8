#include <doctest.h>

#include <omp.h>

#include "openqfr/experiments.hpp"

using namespace openqfr::cli;
using nlohmann::json;

namespace {

// Small configurations for every experiment, used for the determinism check.
std::vector<json> quick_configs() {
    return {
        {{"experiment", "fig3-conditionals"}, {"seed", 4},
         {"parameters", {{"n_traj", 3000}, {"pulse_counts", {0, 3, 20}}}}},
        {{"experiment", "fig4-exchange"}, {"seed", 4},
         {"parameters", {{"n_traj", 20000}, {"pulse_counts", {10}}, {"asymptote_pulses", 100}}}},
        {{"experiment", "pl-curves"}, {"parameters", {{"n_points", 11}, {"t_max", 1.0}}}},
        {{"experiment", "model-comparison"},
         {"parameters", {{"n_pulses", 5}, {"p_abs_optical_scan", {0.45}}}}},
        {{"experiment", "mu-scan"}, {"seed", 9},
         {"parameters", {{"n_points", 3}, {"n_traj", 2000}, {"mc_pulses", 30}}}},
        {{"experiment", "3ls-study"},
         {"parameters", {{"omega13", {0.21}}, {"n_t", 9}, {"surface_n_omega13", 2}, {"n_eta", 20}}}},
        {{"experiment", "analytic-check"},
         {"parameters", {{"n_alpha", 3}, {"n_omega_tau", 3}, {"n_random", 2}, {"n_max", 4}}}},
    };
}

} // namespace

TEST_CASE("catalog lists seven experiments with figure anchors") {
    const auto& cat = experiment_catalog();
    CHECK(cat.size() == 7);
    for (const auto& e : cat) CHECK_FALSE(e.figure.empty());
    const json j = catalog_json();
    CHECK(j.size() == 7);
    CHECK(j[0].contains("defaults"));
    CHECK(catalog_text().find("3ls-study") != std::string::npos);
}

TEST_CASE("schema violations name the offending key") {
    auto expect_error = [](const json& cfg, const std::string& fragment) {
        try {
            run_experiment(cfg);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };
    expect_error({{"experiment", "nope"}}, "experiment");
    expect_error(json::object(), "experiment");
    expect_error({{"experiment", "pl-curves"}, {"extra", 1}}, "extra");
    expect_error({{"experiment", "pl-curves"}, {"parameters", {{"t_maxx", 1.0}}}}, "parameters.t_maxx");
    expect_error({{"experiment", "pl-curves"}, {"parameters", {{"rates", {{"gamma_eg", "fast"}}}}}},
                 "parameters.rates.gamma_eg");
    expect_error({{"experiment", "fig3-conditionals"}, {"parameters", {{"p_abs", 1.5}}}}, "parameters.p_abs");
    expect_error({{"experiment", "fig3-conditionals"}, {"parameters", {{"units", "GHz"}}}}, "units");
    expect_error({{"experiment", "fig3-conditionals"}, {"seed", -1}}, "seed");
    expect_error({{"experiment", "fig4-exchange"}, {"parameters", {{"n_bootstrap", 10}}}}, "n_bootstrap");
    expect_error({{"experiment", "fig3-conditionals"}, {"parameters", {{"tau", 1.0}, {"omega_tau_over_pi", 1.0}}}},
                 "tau");
}

TEST_CASE("units field converts MHz to angular frequency") {
    const json cfg = {{"experiment", "fig3-conditionals"},
                      {"parameters", {{"units", "MHz"}, {"drive", {{"detuning", 0.0}, {"rabi", 1.3}}},
                                      {"tau", 0.5}, {"n_traj", 100}, {"pulse_counts", {1}}}}};
    const ExperimentOutput out = run_experiment(cfg);
    CHECK(out.resolved_parameters["omega"].get<double>() == doctest::Approx(2 * 3.141592653589793 * 1.3));
    CHECK(out.resolved_parameters["alpha"].get<double>() == doctest::Approx(3.141592653589793 / 2));
}

TEST_CASE("seed override replaces the config seed") {
    const json cfg = quick_configs()[0];
    CHECK(run_experiment(cfg, 123).seed == 123);
    CHECK(run_experiment(cfg).seed == 4);
}

TEST_CASE("every experiment is byte-identical across reruns and thread counts") {
    const int saved = omp_get_max_threads();
    for (const json& cfg : quick_configs()) {
        CAPTURE(cfg.dump());
        omp_set_num_threads(1);
        const ExperimentOutput a = run_experiment(cfg);
        omp_set_num_threads(4);
        const ExperimentOutput b = run_experiment(cfg);
        REQUIRE(a.files.size() == b.files.size());
        for (std::size_t k = 0; k < a.files.size(); ++k) {
            CHECK(a.files[k].name == b.files[k].name);
            CHECK(a.files[k].contents == b.files[k].contents);
            CHECK(a.files[k].contents.find('\n') != std::string::npos);
        }
    }
    omp_set_num_threads(saved);
}

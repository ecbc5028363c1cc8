#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "openqfr/experiments.hpp"

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitNumerical = 3;

// --threads wins over OPENQFR_THREADS; 0 keeps the OpenMP default.
int resolve_threads(int flag) {
    if (flag > 0) return flag;
    const char* env = std::getenv("OPENQFR_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    try {
        std::size_t used = 0;
        const int n = std::stoi(env, &used);
        if (used == std::string(env).size() && n > 0) return n;
    } catch (const std::exception&) {
    }
    throw openqfr::cli::SchemaError("OPENQFR_THREADS must be a positive integer");
}

int run(const std::string& config_path, const std::optional<std::string>& out_dir,
        std::optional<std::uint64_t> seed, int threads_flag) {
    using namespace openqfr::cli;
    try {
        const int threads = resolve_threads(threads_flag);
        if (threads > 0) omp_set_num_threads(threads);
        const nlohmann::json config = load_config(config_path);
        std::optional<std::filesystem::path> override_dir;
        if (out_dir) override_dir = *out_dir;
        const auto dir = resolve_output_dir(config, override_dir);

        const auto start = std::chrono::steady_clock::now();
        const ExperimentOutput output = run_experiment(config, seed);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_outputs(output, dir, config, threads > 0 ? threads : omp_get_max_threads(), wall);
        std::cout << output.experiment << ": wrote " << output.files.size() << " CSV file(s) to "
                  << dir.string() << " in " << wall << " s\n";
        return 0;
    } catch (const SchemaError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const openqfr::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open quantum system fluctuation-relation experiments"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Run an experiment from a JSON config");
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    run_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
    run_cmd->add_option("--out", out_dir, "Output directory");
    run_cmd->add_option("--seed", seed, "Override the config seed");
    run_cmd->add_option("--threads", threads, "Worker threads (fallback: OPENQFR_THREADS)")
        ->check(CLI::PositiveNumber);

    auto* list_cmd = app.add_subcommand("list", "List the available experiments");
    bool as_json = false;
    list_cmd->add_flag("--json", as_json, "Machine-readable catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitSchema;
    }

    if (*list_cmd) {
        if (as_json)
            std::cout << openqfr::cli::catalog_json().dump(2) << '\n';
        else
            std::cout << openqfr::cli::catalog_text();
        return 0;
    }
    return run(config_path, out_dir, seed, threads);
}

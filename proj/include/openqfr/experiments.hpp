#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "openqfr/errors.hpp"

namespace openqfr::cli {

/// Malformed or out-of-range configuration; the message names the offending key.
class SchemaError : public Error {
public:
    using Error::Error;
};

struct ExperimentInfo {
    std::string name;
    /// Figure of the source study the experiment reproduces.
    std::string figure;
    std::string summary;
    nlohmann::json defaults;
    std::vector<std::string> outputs;
};

/// The seven named experiments, in a fixed order.
const std::vector<ExperimentInfo>& experiment_catalog();
std::string catalog_text();
nlohmann::json catalog_json();

struct OutputFile {
    std::string name;
    std::string contents;
};

struct ExperimentOutput {
    std::string experiment;
    std::uint64_t seed = 0;
    nlohmann::json resolved_parameters;
    std::vector<OutputFile> files;
};

/// Validates `config` completely (SchemaError) before any computation, then runs it.
/// Numerical failures surface as other openqfr::Error types. No filesystem access.
ExperimentOutput run_experiment(const nlohmann::json& config,
                                std::optional<std::uint64_t> seed_override = std::nullopt);

/// Parses a config file; unreadable files and JSON syntax errors raise SchemaError.
nlohmann::json load_config(const std::filesystem::path& path);

/// Writes every CSV of `output` plus manifest.json into `dir`.
void write_outputs(const ExperimentOutput& output, const std::filesystem::path& dir,
                   const nlohmann::json& config, int threads, double wall_seconds);

/// Output directory: override, else the config's "output_dir", else "out/<experiment>".
std::filesystem::path resolve_output_dir(const nlohmann::json& config,
                                         const std::optional<std::filesystem::path>& override_dir);

inline constexpr const char* kVersion = "0.1.0";

} // namespace openqfr::cli

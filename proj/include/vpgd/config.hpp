#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vpgd/model.hpp"
#include "vpgd/pgd.hpp"

namespace vpgd {

struct Discretization {
    std::size_t n_x = 51;     ///< spatial nodes
    std::size_t n_t = 2001;   ///< time nodes
    std::size_t n_macro = 21;
    std::size_t n_micro = 201;
};

/// How the relaxation spectrum was specified; kept so the manifest echoes the input form.
struct SpectrumSpec {
    bool generated = true;
    std::size_t n_processes = 1;
    double n_decades = 0.0;
    double tau_max = 5.0;
    double total_weight = 0.025;
};

struct OutputSettings {
    std::filesystem::path directory = "out";
    std::vector<double> probes_x;       ///< empty: midspan
    bool write_internal_fields = true;  ///< z_field_<j>.csv, one per process
};

struct RunConfig {
    ProblemDefinition problem;
    SpectrumSpec spectrum_spec;
    Discretization discretization;
    PgdSettings solver;
    OutputSettings output;

    /// Checks every invariant of the resolved configuration; throws ConfigError.
    void validate() const;
    Mesh1D mesh() const;
    SingleScaleGrid grid() const;
    std::vector<double> probes() const;
};

/// Strict JSON reader: unknown keys, wrong types and invalid values raise ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Defaults of the single-process experiment.
RunConfig default_config();

/// Fully resolved configuration, suitable as input to parse_config.
std::string config_to_json(const RunConfig& config);

}  // namespace vpgd

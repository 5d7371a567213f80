#pragma once

#include "pdp/optimizer.hpp"
#include "pdp/timedomain.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pdp::io {

using json = nlohmann::json;

/// Everything a CLI run needs, parsed from one JSON document.
///
///   grid       {x_min, x_max, n}
///   design     {a, b, mu, delta, beta_mode: "fixed" | "equals_v",
///               beta_halfwidth, beta_height, wronskian_tol}
///   init       {shape: "sech" | "sech2", A, B}
///   optimizer  {tau_schedule, max_iterations, max_stage_iterations, memory,
///               armijo, backtrack, max_backtracks, grad_tol, max_step,
///               min_step, symmetric, objective: "log_gamma" | "gamma"}
///   simulator  {epsilon, mu, t_final, dt_max, record_interval,
///               domain {x_min, x_max, n}, absorber {width, strength},
///               noise_amplitude, seed, fit_window [t0, t1]}
///   sweep_k    {k_min, k_max, count}
///   gradcheck  {directions, epsilon, seed, tolerance}
///
/// Missing blocks and fields take the defaults below.
struct RunConfig {
    Grid grid = make_grid(-20.0, 20.0, 2001);
    DesignParams design;
    double beta_halfwidth = 2.0;
    double beta_height = 1.0;

    std::string init_shape = "sech";
    double init_depth = 2.0;
    double init_inverse_length = 2.0;

    OptOptions optimizer;

    SimConfig sim;
    double noise_amplitude = 1.0;
    std::uint64_t seed = 1;
    double fit_begin = 0.0;
    double fit_end = -1.0; ///< negative means t_final

    double k_min = 0.05;
    double k_max = 3.0;
    int k_count = 120;

    int grad_directions = 10;
    double grad_epsilon = 1e-4;
    std::uint64_t grad_seed = 7;
    double grad_tolerance = 1e-3;

    RunConfig();
};

/// Throws ConfigError on unknown values, wrong types or failed validation.
RunConfig parse_config(const json& doc);
RunConfig load_config(const std::filesystem::path& path);
/// Effective configuration, suitable for a manifest snapshot.
json to_json(const RunConfig& cfg);

/// Rebuilds the forcing profile for a grid and attaches it to `design`.
DesignParams design_on(const RunConfig& cfg, const Grid& grid);

/// The sech or sech^2 starting well of the config on its grid.
PotentialField initial_potential(const RunConfig& cfg);

/// Reads "x,V" rows (one header line) on a uniform grid. Throws ConfigError.
PotentialField read_potential_csv(const std::filesystem::path& path, double support_halfwidth);

/// Rows of doubles printed with %.17g, comma separated, one header line.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

/// Collects output files and headline numbers, then writes manifest.json.
class Manifest {
public:
    Manifest(std::string command, json config, std::filesystem::path out_dir);

    std::filesystem::path file(const std::string& name);
    void set(const std::string& key, json value) { doc_[key] = std::move(value); }
    json& headline() { return doc_["headline"]; }
    void write();

private:
    std::filesystem::path out_;
    json doc_;
};

std::string code_version();

} // namespace pdp::io

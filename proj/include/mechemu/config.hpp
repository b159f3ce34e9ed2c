#pragma once

#include "mechemu/refinement.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mechemu {

/// Observations generated from the configured simulator instead of read from a file.
struct SyntheticObservation {
    ParameterVector truth;
    double sigma_e = 0.0;
    double sigma_b = 0.0;
    std::uint64_t seed = 0;
};

struct SimulatorConfig {
    std::string type = "toy";  ///< toy | linear | external
    ToyCatchment toy;
    AuxiliaryParameters linear;
    std::string command;
    std::string working_directory;
    double timeout_s = 60.0;
};

/// Everything a command needs. Relative paths are resolved against the
/// directory holding the config file.
struct RunConfig {
    std::filesystem::path rain_path;
    std::string rain_unit = "m/s";  ///< m/s | mm/h
    std::filesystem::path observation_path;
    std::optional<SyntheticObservation> synthetic;
    std::filesystem::path output_dir;
    std::string flow_unit = "m3/s";

    ParameterSpace space;
    PriorSpec prior;
    double lambda = 0.35;
    std::optional<double> tau;  ///< nullopt: recession rule on the simulator output at the prior modes

    double gamma = 5.0;
    EmulatorOptions emulator;
    AuxFitOptions aux_fit;
    std::size_t budget = 128;
    double stretch = 1.1;
    std::size_t compare_size = 200;
    double convergence_threshold = 0.2;
    McmcSettings mcmc;
    std::uint64_t seed = 0;

    SimulatorConfig simulator;
    std::optional<Aggregates> catchment;  ///< required unless the simulator supplies its own

    std::vector<std::size_t> bench_sizes{32, 64, 128};
    std::size_t bench_queries = 20;

    /// Normalised JSON document with every default filled in.
    std::string snapshot() const;
    CatchmentAggregates aggregates() const;
};

/// Strict parse: unknown keys, wrong types and missing required keys are
/// ConfigErrors naming the key. Referenced input files must exist.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

std::unique_ptr<Simulator> make_simulator(const RunConfig& config, const TimeSeries& rain);

/// Rain, observations (read or synthesised) and the resolved tau.
struct LoadedProblem {
    Problem problem;
    std::unique_ptr<Simulator> simulator;
    std::size_t clipped = 0;  ///< synthetic points clipped at zero
};

LoadedProblem load_problem(const RunConfig& config);

}  // namespace mechemu

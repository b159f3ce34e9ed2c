#pragma once

#include "mechemu/config.hpp"

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace mechemu {

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;          ///< overrides the config seed
    std::optional<std::filesystem::path> out;   ///< overrides the config output directory
    std::string mode = "emulator";              ///< infer: emulator | direct
    std::string stage = "initial";              ///< design: initial (n/2 points) | full (n points)
};

/// Exclusive ownership of a run directory through `<dir>/.lock`.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path path_;
};

/// A design directory: design.csv (index,<names>,origin), outputs/<i>.csv and
/// meta.json with the fitted auxiliary parameters.
void write_design(const std::filesystem::path& dir, const DesignSet& design, const AuxiliaryParameters& aux,
                  double tau);

struct StoredDesign {
    DesignSet design;
    AuxiliaryParameters aux;
};

StoredDesign read_design(const std::filesystem::path& dir, const ParameterSpace& space, const std::string& unit);

/// Loads the config and applies the command-line overrides.
RunConfig resolve_config(const CommandOptions& options);

int cmd_design(const CommandOptions& options, std::ostream& log);
int cmd_infer(const CommandOptions& options, std::ostream& log);
int cmd_refine(const CommandOptions& options, std::ostream& log);
int cmd_bench(const CommandOptions& options, std::ostream& log);
int cmd_compare(const std::filesystem::path& a, const std::filesystem::path& b, std::uint64_t seed,
                std::size_t size, const std::optional<std::filesystem::path>& out, std::ostream& log);
int cmd_report(const std::filesystem::path& run_dir, std::ostream& log);

/// 2 config / argument error, 3 simulator or protocol failure, 4 numerical
/// or estimation failure, 1 anything else.
int exit_code(const std::exception& e);

}  // namespace mechemu

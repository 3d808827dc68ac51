#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "npt/config.hpp"
#include "npt/harness.hpp"

namespace npt::cli {

inline constexpr const char* kVersion = "0.1.0";

struct ParsedCommand {
    std::string subcommand;
    ExperimentConfig config;
    std::string out_dir = ".";
    bool help = false;
    std::string help_text;
};

/// Parses arguments (without the program name). Flags override values from
/// --config, which override NPT_SEED for the seed. Throws npt::Error with a
/// readable message on any parse or validation failure.
ParsedCommand parse_command_line(const std::vector<std::string>& args);

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Flat key = value text accepted by --config.
std::string config_to_text(const ExperimentConfig& config);

struct RunFailure {
    std::uint64_t stream = 0;
    FailureInfo info;
};

nlohmann::json make_manifest(const ExperimentConfig& config, const std::vector<RunFailure>& failures,
                             double wall_ms, const std::vector<std::string>& outputs);

/// Shortest round-trip formatting with 17 significant digits.
std::string format_double(double x);

/// Runs a parsed command and returns the process exit status: 0 on success,
/// 2 when a trajectory hit a step failure.
int dispatch(const ParsedCommand& command);

/// Full entry point: parse, dispatch, report errors as JSON on stderr.
int main(int argc, char** argv);

}  // namespace npt::cli

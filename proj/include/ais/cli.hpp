#pragma once

#include <ostream>
#include <span>
#include <string>

#include "ais/experiment.hpp"
#include "ais/model.hpp"

namespace ais::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitUsage = 64;

/// Parses "X=1,Y=0" into an assignment. Throws ParseError on malformed text.
Assignment parse_evidence(const std::string& text);

/// Builds an experiment from its JSON description. Relative model paths
/// resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& base_dir);

/// Entry point behind the `ais` executable; args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ais::cli

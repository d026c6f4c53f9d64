#pragma once

#include <iosfwd>
#include <string>

#include "defatc/config.hpp"

namespace defatc {

/// Entry point behind main(). Parses `run`, `rd-curve`, `verify`, and
/// `stability-check` subcommands; returns the process exit status.
int run_cli(int argc, const char* const* argv);

// Subcommand bodies, exposed so tests can drive them directly.
int cmd_run(const ExperimentConfig& config, const std::string& level_dump_path = {});
int cmd_rd_curve(const ExperimentConfig& config);
int cmd_verify(const ExperimentConfig& config, std::ostream& out);
int cmd_stability(const ExperimentConfig& config, std::ostream& out);

}  // namespace defatc

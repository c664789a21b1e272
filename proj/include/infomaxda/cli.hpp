#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "infomaxda/oracle.hpp"

namespace infomaxda {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

/// Entry point of the command-line tool. `args` includes the program name.
/// Subcommands: gaussian-mi, train, ablate, sweep, compare, cross-eval,
/// oracle, gradcheck. Every run that gets as far as resolving an output
/// directory leaves a manifest.json there.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string report_json(const oracle::CheckReport& report);

}  // namespace infomaxda

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "scenario_file.hpp"

namespace abdsde::cli {

enum class ExitStatus : int { kPass = 0, kFail = 1, kError = 2 };

const std::vector<std::string>& command_names();

/// Runs one command and writes its CSV (header comment block, column header, rows).
/// Throws Error for unknown commands or incompatible scenarios.
ExitStatus run_command(const std::string& command, const ScenarioFile& file, std::ostream& csv);

/// Full entry point: argument parsing, loading, running, writing --out.
int main_entry(int argc, char** argv);

}  // namespace abdsde::cli

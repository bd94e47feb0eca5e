#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cylhjm/cli/config.hpp"
#include "cylhjm/cli/report.hpp"

namespace cylhjm::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitInputError = 1,
  kExitCheckFailure = 2,
  kExitBlowUp = 3,
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes `<subcommand>.json` plus CSV detail files
/// into `out_dir`, which is created if needed. Nothing else is written.
Report run_subcommand(const std::string& subcommand, const ScenarioConfig& config,
                      const std::filesystem::path& out_dir);

/// Loads the scenario, runs the subcommand and maps the outcome to an exit
/// code. `out_dir` overrides the scenario's output_dir. Diagnostics go to `log`.
int run(const std::string& subcommand, const std::filesystem::path& config_path,
        const std::optional<std::filesystem::path>& out_dir, std::ostream& log);

}  // namespace cylhjm::cli

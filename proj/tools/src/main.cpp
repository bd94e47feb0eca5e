#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "cylhjm/cli/commands.hpp"
#include "cylhjm/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Measure-valued HJM simulation and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cylhjm 0.1.0, report schema " + cylhjm::cli::report_schema_version());

  std::string config;
  std::string out;
  std::size_t workers = 0;
  for (const auto& name : cylhjm::cli::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", config, "scenario YAML file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out, "output directory (overrides output_dir in the scenario)");
    sub->add_option("-j,--workers", workers, "worker threads, 0 for one per hardware thread");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cylhjm::cli::kExitInputError;
  }

  cylhjm::worker_count() = workers;
  const std::string subcommand = app.get_subcommands().front()->get_name();
  std::optional<std::filesystem::path> out_dir;
  if (!out.empty()) out_dir = out;
  return cylhjm::cli::run(subcommand, config, out_dir, std::cerr);
}

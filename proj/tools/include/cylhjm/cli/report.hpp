#pragma once

// Machine-readable output: JSON verdict reports and CSV detail tables.

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace cylhjm::cli {

/// Semantic version of the report layout published in docs/report_schema.json.
std::string report_schema_version();

struct CheckResult {
  std::string name;
  bool pass = true;
  nlohmann::json metrics = nlohmann::json::object();
};

struct Report {
  std::string subcommand;
  std::string scenario;
  std::string scenario_hash;
  std::vector<CheckResult> checks;

  bool all_pass() const;
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// Comma-separated, header row, LF line endings; reals use 17 significant digits.
class CsvWriter {
 public:
  using Cell = std::variant<std::string, double, long long, bool>;

  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<Cell>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

std::string format_real(double v);

}  // namespace cylhjm::cli

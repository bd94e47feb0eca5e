#pragma once

// Scenario files: one YAML document describing the grids, the driver, both
// model components and the per-subcommand check settings. See
// docs/scenario_format.md for the full key tree.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylhjm/noise.hpp"
#include "cylhjm/termstructure.hpp"

namespace cylhjm::cli {

/// Invalid scenario input. what() starts with "<source>:<line>: " when the
/// offending node is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DriverConfig {
  std::size_t factors = 1;
  std::size_t n_paths = 256;
  std::uint64_t seed = 1;
};

struct ComponentConfig {
  SignedMeasure x0;
  ExampleCoefficientSpec spec;
  DriftRule drift = DriftRule::hjm;
};

struct DriftCheckConfig {
  double tolerance = 1e-10;
};

struct NegativeControlConfig {
  /// Injected drift atom weight, in units of the unperturbed standard error
  /// of the longest bond at the last checkpoint, divided by that maturity.
  double epsilon_stderr = 10.0;
  /// Atom location; defaults to the first grid point.
  std::optional<double> location;
};

struct MartingaleCheckConfig {
  std::size_t seeds = 1;
  double min_pass_fraction = 0.95;
  std::optional<NegativeControlConfig> negative_control;
};

struct BankCheckConfig {
  /// Time step at which B is compared; defaults to the horizon.
  std::optional<std::size_t> step;
  /// Defaults to the powers of two dividing the step.
  std::vector<std::size_t> subdivisions;
  double finest_tolerance = 1e-10;
  double monotone_slack = 1e-12;
  double telescoping_tolerance = 1e-12;
};

struct PicardCheckConfig {
  std::size_t max_iterations = 20;
  double tolerance = 1e-8;
  bool split_on_expansion = true;
  /// Defaults to the driver's path count.
  std::optional<std::size_t> n_paths;
};

struct IsometryCheckConfig {
  std::size_t factors = 2;
  std::size_t dim = 2;
  std::size_t n_steps = 16;
  double dt = 1.0 / 16.0;
  std::size_t n_paths = 10000;
  std::size_t seeds = 1;
  std::uint64_t seed = 1;
  std::uint64_t integrand_seed = 7;
  double min_pass_fraction = 0.99;
  bool anticipating_control = true;
};

struct DiracCheckConfig {
  double t = 1.0;
  std::size_t base_steps = 32;
  std::size_t refinements = 3;
  std::size_t n_paths = 32;
  std::uint64_t seed = 1;
  double ratio_low = 0.3;
  double ratio_high = 0.7;
};

struct CylindrifyCheckConfig {
  std::size_t instances = 200;
  std::size_t max_dim = 8;
  std::size_t max_dim_e = 4;
  std::size_t samples = 64;
  std::uint64_t seed = 1;
  double tolerance = 1e-9;
};

struct SimulateConfig {
  std::size_t terminal_paths = 4;
};

struct ScenarioConfig {
  std::string name;
  std::string source;
  MaturityGrid grid;
  TimeGrid time;
  DriverConfig driver;
  ComponentConfig rates;
  ComponentConfig energy;
  std::vector<double> maturities;
  std::vector<double> checkpoints;
  std::vector<FuturesBucket> buckets;
  std::optional<std::string> output_dir;

  DriftCheckConfig drift_check;
  MartingaleCheckConfig martingale;
  BankCheckConfig bank_account;
  PicardCheckConfig picard;
  IsometryCheckConfig ito_isometry;
  DiracCheckConfig dirac;
  CylindrifyCheckConfig cylindrify;
  SimulateConfig simulate;

  /// Sorted-key JSON rendering of the document without output_dir.
  std::string canonical;
  /// FNV-1a 64 of `canonical`, as 16 hex digits.
  std::string hash;

  HJMModel model() const;
  BrownianDriver sample_driver(std::uint64_t seed_offset = 0) const;
  BrownianDriver sample_driver(std::uint64_t seed, std::size_t n_paths) const;
};

ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "<string>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace cylhjm::cli

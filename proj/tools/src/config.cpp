#include "cylhjm/cli/config.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <sstream>

namespace cylhjm::cli {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
    const YAML::Mark mark = at.Mark();
    if (mark.is_null() || mark.line < 0) throw ConfigError(fmt::format("{}: {}", source_, message));
    throw ConfigError(fmt::format("{}:{}: {}", source_, mark.line + 1, message));
  }

  void expect_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping");
  }

  void expect_keys(const YAML::Node& n, const std::string& what,
                   std::initializer_list<const char*> allowed) const {
    expect_map(n, what);
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) fail(kv.first, fmt::format("unknown key '{}' in {}", key, what));
    }
  }

  double number(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a number");
    double v = 0.0;
    try {
      v = n.as<double>();
    } catch (const YAML::Exception&) {
      fail(n, fmt::format("{} must be a number, got '{}'", what, n.Scalar()));
    }
    if (!std::isfinite(v)) fail(n, what + " must be finite");
    return v;
  }

  std::uint64_t unsigned_int(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a non-negative integer");
    try {
      const auto v = n.as<long long>();
      if (v < 0) fail(n, what + " must be non-negative");
      return static_cast<std::uint64_t>(v);
    } catch (const YAML::Exception&) {
      fail(n, fmt::format("{} must be a non-negative integer, got '{}'", what, n.Scalar()));
    }
  }

  std::size_t positive(const YAML::Node& n, const std::string& what) const {
    const auto v = unsigned_int(n, what);
    if (v == 0) fail(n, what + " must be positive");
    return static_cast<std::size_t>(v);
  }

  bool flag(const YAML::Node& n, const std::string& what) const {
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be true or false");
    }
  }

  std::string text(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a string");
    return n.Scalar();
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], fmt::format("{}[{}]", what, i)));
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

SignedMeasure read_measure(const Reader& r, const YAML::Node& n, const MaturityGrid& grid,
                           const std::string& what) {
  SignedMeasure mu(grid);
  if (!n || n.IsNull()) return mu;
  r.expect_keys(n, what, {"cell_width", "n_cells", "atoms", "density", "segments"});
  if (n["cell_width"] && !close(r.number(n["cell_width"], what + ".cell_width"), grid.cell_width())) {
    r.fail(n["cell_width"], what + ".cell_width differs from the maturity grid");
  }
  if (n["n_cells"] && r.unsigned_int(n["n_cells"], what + ".n_cells") != grid.n_cells()) {
    r.fail(n["n_cells"], what + ".n_cells differs from the maturity grid");
  }
  if (const auto d = n["density"]) {
    if (d.IsScalar()) {
      const double v = r.number(d, what + ".density");
      for (std::size_t k = 0; k < grid.n_cells(); ++k) mu.set_density(k, v);
    } else {
      const auto values = r.numbers(d, what + ".density");
      if (values.size() != grid.n_cells()) {
        r.fail(d, fmt::format("{}.density lists {} values, the grid has {} cells", what, values.size(),
                              grid.n_cells()));
      }
      for (std::size_t k = 0; k < values.size(); ++k) mu.set_density(k, values[k]);
    }
  }
  if (const auto segs = n["segments"]) {
    if (!segs.IsSequence()) r.fail(segs, what + ".segments must be a list");
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto s = segs[i];
      const std::string where = fmt::format("{}.segments[{}]", what, i);
      r.expect_keys(s, where, {"from", "to", "value"});
      if (!s["from"] || !s["to"] || !s["value"]) r.fail(s, where + " needs from, to and value");
      const double a = r.number(s["from"], where + ".from");
      const double b = r.number(s["to"], where + ".to");
      const double v = r.number(s["value"], where + ".value");
      if (!grid.is_aligned(a) || !grid.is_aligned(b) || a < 0.0 || b > grid.window() + 1e-12 || a > b) {
        r.fail(s, where + " must satisfy 0 <= from <= to <= window with both ends on the grid");
      }
      for (std::size_t k = grid.cells_in(a); k < grid.cells_in(b); ++k) {
        mu.set_density(k, mu.density()[k] + v);
      }
    }
  }
  if (const auto atoms = n["atoms"]) {
    if (!atoms.IsSequence()) r.fail(atoms, what + ".atoms must be a list of [location, weight] pairs");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto a = atoms[i];
      const std::string where = fmt::format("{}.atoms[{}]", what, i);
      if (!a.IsSequence() || a.size() != 2) r.fail(a, where + " must be a [location, weight] pair");
      try {
        mu.add_atom(r.number(a[0], where + " location"), r.number(a[1], where + " weight"));
      } catch (const std::invalid_argument& e) {
        r.fail(a, where + ": " + e.what());
      }
    }
  }
  return mu;
}

StepFunction read_test_function(const Reader& r, const YAML::Node& n, const MaturityGrid& grid,
                                const std::string& what) {
  r.expect_keys(n, what, {"indicator", "constant", "cells", "points"});
  const int kinds = (n["indicator"] ? 1 : 0) + (n["constant"] ? 1 : 0) + (n["cells"] ? 1 : 0);
  if (kinds != 1) r.fail(n, what + " needs exactly one of indicator, constant or cells");
  StepFunction f;
  if (const auto ind = n["indicator"]) {
    const auto ends = r.numbers(ind, what + ".indicator");
    if (ends.size() != 2 || !grid.is_aligned(ends[0]) || !grid.is_aligned(ends[1]) || ends[0] > ends[1] ||
        ends[0] < 0.0 || ends[1] > grid.window() + 1e-12) {
      r.fail(ind, what + ".indicator must be [a, b] with grid-aligned 0 <= a <= b <= window");
    }
    f = StepFunction::indicator(grid, ends[0], ends[1]);
  } else if (const auto c = n["constant"]) {
    f = StepFunction::constant(grid, r.number(c, what + ".constant"));
  } else {
    f.cell_values = r.numbers(n["cells"], what + ".cells");
    if (f.cell_values.size() != grid.n_cells()) {
      r.fail(n["cells"], fmt::format("{}.cells lists {} values, the grid has {} cells", what,
                                     f.cell_values.size(), grid.n_cells()));
    }
  }
  if (const auto pts = n["points"]) {
    if (!pts.IsSequence()) r.fail(pts, what + ".points must be a list of [location, value] pairs");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto p = pts[i];
      if (!p.IsSequence() || p.size() != 2) r.fail(p, what + ".points entries are [location, value] pairs");
      f.set_point(grid, r.number(p[0], what + ".points location"), r.number(p[1], what + ".points value"));
    }
  }
  return f;
}

ComponentConfig read_component(const Reader& r, const YAML::Node& n, const MaturityGrid& grid,
                               std::size_t factors, const std::string& what, bool energy) {
  ComponentConfig c{SignedMeasure(grid), ExampleCoefficientSpec{grid, factors, {}, {}},
                    energy ? DriftRule::zero : DriftRule::hjm};
  if (!n || n.IsNull()) return c;
  r.expect_keys(n, what, {"x0", "drift", "test_functions", "volatility"});
  c.x0 = read_measure(r, n["x0"], grid, what + ".x0");
  if (const auto d = n["drift"]) {
    const auto rule = r.text(d, what + ".drift");
    if (rule == "zero") {
      c.drift = DriftRule::zero;
    } else if (rule == "hjm" && !energy) {
      c.drift = DriftRule::hjm;
    } else {
      r.fail(d, energy ? what + ".drift must be 'zero' (advance settlement)"
                       : what + ".drift must be 'hjm' or 'zero'");
    }
  }
  if (const auto tf = n["test_functions"]) {
    if (!tf.IsSequence()) r.fail(tf, what + ".test_functions must be a list");
    for (std::size_t i = 0; i < tf.size(); ++i) {
      c.spec.test_functions.push_back(
          read_test_function(r, tf[i], grid, fmt::format("{}.test_functions[{}]", what, i)));
    }
  }
  if (const auto vol = n["volatility"]) {
    if (!vol.IsSequence()) r.fail(vol, what + ".volatility must be a list");
    for (std::size_t i = 0; i < vol.size(); ++i) {
      const auto t = vol[i];
      const std::string where = fmt::format("{}.volatility[{}]", what, i);
      r.expect_keys(t, where, {"factor", "base", "loading"});
      VolTerm term{0, read_measure(r, t["base"], grid, where + ".base"), Loading{1.0, {}, 0.0}};
      if (t["factor"]) term.factor = r.unsigned_int(t["factor"], where + ".factor");
      if (term.factor >= factors) {
        r.fail(t["factor"] ? t["factor"] : t,
               fmt::format("{} uses factor {} but the driver has {}", where, term.factor, factors));
      }
      if (const auto l = t["loading"]) {
        r.expect_keys(l, where + ".loading", {"constant", "slope", "saturation"});
        if (l["constant"]) term.loading.constant = r.number(l["constant"], where + ".loading.constant");
        if (l["slope"]) term.loading.slope = r.numbers(l["slope"], where + ".loading.slope");
        if (l["saturation"]) term.loading.saturation = r.number(l["saturation"], where + ".loading.saturation");
      }
      c.spec.terms.push_back(std::move(term));
      try {
        c.spec.validate();
      } catch (const std::invalid_argument& e) {
        r.fail(t, e.what());
      }
    }
  }
  return c;
}

nlohmann::json to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Map: {
      nlohmann::json out = nlohmann::json::object();
      for (const auto& kv : n) out[kv.first.as<std::string>()] = to_json(kv.second);
      return out;
    }
    case YAML::NodeType::Sequence: {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& v : n) out.push_back(to_json(v));
      return out;
    }
    case YAML::NodeType::Scalar: {
      const std::string& s = n.Scalar();
      if (n.Tag() != "!") {
        try {
          std::size_t used = 0;
          const long long i = std::stoll(s, &used);
          if (used == s.size()) return i;
        } catch (const std::exception&) {
        }
        try {
          return n.as<double>();
        } catch (const YAML::Exception&) {
        }
        if (s == "true" || s == "false") return s == "true";
      }
      return s;
    }
    default:
      return nullptr;
  }
}

std::vector<double> quarterly(double lo_exclusive, double hi, const MaturityGrid& grid) {
  std::vector<double> out;
  for (int k = 1; 0.25 * k <= hi + 1e-12; ++k) {
    const double t = 0.25 * k;
    if (t > lo_exclusive && grid.is_aligned(t)) out.push_back(t);
  }
  return out;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
  }
  r.expect_keys(root, "scenario",
                {"name", "grid", "time", "driver", "rates", "energy", "maturities", "checkpoints",
                 "buckets", "output_dir", "checks", "simulate"});

  for (const char* required : {"grid", "time"}) {
    if (!root[required]) r.fail(root, fmt::format("missing required section '{}'", required));
  }
  const auto g = root["grid"];
  r.expect_keys(g, "grid", {"cell_width", "n_cells"});
  if (!g["cell_width"] || !g["n_cells"]) r.fail(g, "grid needs cell_width and n_cells");
  const double h = r.number(g["cell_width"], "grid.cell_width");
  if (!(h > 0.0)) r.fail(g["cell_width"], "grid.cell_width must be positive");
  const MaturityGrid grid(h, r.positive(g["n_cells"], "grid.n_cells"));

  const auto t = root["time"];
  r.expect_keys(t, "time", {"dt", "n_steps"});
  if (!t["n_steps"]) r.fail(t, "time needs n_steps");
  if (t["dt"] && !close(r.number(t["dt"], "time.dt"), h)) {
    r.fail(t["dt"], fmt::format("time.dt must equal grid.cell_width ({})", h));
  }
  const TimeGrid time(h, r.positive(t["n_steps"], "time.n_steps"));
  const double horizon = time.horizon();
  if (horizon > grid.window() + 1e-12) r.fail(t["n_steps"], "the time horizon exceeds the maturity window");

  DriverConfig driver;
  if (const auto d = root["driver"]) {
    r.expect_keys(d, "driver", {"factors", "paths", "seed"});
    if (d["factors"]) driver.factors = r.positive(d["factors"], "driver.factors");
    if (d["paths"]) driver.n_paths = r.positive(d["paths"], "driver.paths");
    if (d["seed"]) driver.seed = r.unsigned_int(d["seed"], "driver.seed");
  }

  ScenarioConfig cfg{
      .name = root["name"] ? r.text(root["name"], "name") : std::string("scenario"),
      .source = source,
      .grid = grid,
      .time = time,
      .driver = driver,
      .rates = read_component(r, root["rates"], grid, driver.factors, "rates", false),
      .energy = read_component(r, root["energy"], grid, driver.factors, "energy", true),
  };

  auto read_times = [&](const char* key, std::vector<double>& out) {
    const auto n = root[key];
    if (!n) return false;
    if (!n.IsSequence()) r.fail(n, std::string(key) + " must be a list");
    for (std::size_t i = 0; i < n.size(); ++i) {
      const double v = r.number(n[i], fmt::format("{}[{}]", key, i));
      if (!grid.is_aligned(v)) {
        r.fail(n[i], fmt::format("{}[{}] = {} is not a grid point (cell width {})", key, i, v, h));
      }
      out.push_back(v);
    }
    return true;
  };

  if (read_times("maturities", cfg.maturities)) {
    for (std::size_t i = 0; i < cfg.maturities.size(); ++i) {
      if (!(cfg.maturities[i] > 0.0)) r.fail(root["maturities"][i], "maturities must be positive");
      if (horizon + cfg.maturities[i] > grid.window() + 1e-12) {
        r.fail(root["maturities"][i],
               fmt::format("horizon {} plus maturity {} exceeds the window {}", horizon, cfg.maturities[i],
                           grid.window()));
      }
    }
  } else {
    cfg.maturities = quarterly(0.0, grid.window() - horizon, grid);
  }

  if (read_times("checkpoints", cfg.checkpoints)) {
    for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
      if (cfg.checkpoints[i] < 0.0 || cfg.checkpoints[i] > horizon + 1e-12) {
        r.fail(root["checkpoints"][i], fmt::format("checkpoint {} lies outside [0, {}]", cfg.checkpoints[i], horizon));
      }
    }
  } else {
    cfg.checkpoints = quarterly(0.0, horizon, grid);
    if (cfg.checkpoints.empty() || !close(cfg.checkpoints.back(), horizon)) cfg.checkpoints.push_back(horizon);
  }

  if (const auto b = root["buckets"]) {
    if (!b.IsSequence()) r.fail(b, "buckets must be a list of [T1, T2] pairs");
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto ends = r.numbers(b[i], fmt::format("buckets[{}]", i));
      if (ends.size() != 2 || ends[0] > ends[1] || ends[0] < 0.0) {
        r.fail(b[i], fmt::format("buckets[{}] must be [T1, T2] with 0 <= T1 <= T2", i));
      }
      if (!grid.is_aligned(ends[0]) || !grid.is_aligned(ends[1])) {
        r.fail(b[i], fmt::format("buckets[{}] has an end that is not a grid point", i));
      }
      if (ends[1] > grid.window() + 1e-12) r.fail(b[i], fmt::format("buckets[{}] extends past the window", i));
      cfg.buckets.push_back({ends[0], ends[1]});
    }
  } else if (root["energy"]) {
    const auto q = quarterly(0.0, grid.window(), grid);
    double prev = 0.0;
    for (double v : q) {
      cfg.buckets.push_back({prev, v});
      prev = v;
    }
  }

  if (const auto o = root["output_dir"]) cfg.output_dir = r.text(o, "output_dir");

  if (const auto s = root["simulate"]) {
    r.expect_keys(s, "simulate", {"terminal_paths"});
    if (s["terminal_paths"]) cfg.simulate.terminal_paths = r.unsigned_int(s["terminal_paths"], "simulate.terminal_paths");
  }

  if (const auto checks = root["checks"]) {
    r.expect_keys(checks, "checks",
                  {"drift", "martingale", "bank_account", "picard", "ito_isometry", "dirac", "cylindrify"});
    if (const auto c = checks["drift"]) {
      r.expect_keys(c, "checks.drift", {"tolerance"});
      if (c["tolerance"]) cfg.drift_check.tolerance = r.number(c["tolerance"], "checks.drift.tolerance");
    }
    if (const auto c = checks["martingale"]) {
      r.expect_keys(c, "checks.martingale", {"seeds", "min_pass_fraction", "negative_control"});
      if (c["seeds"]) cfg.martingale.seeds = r.positive(c["seeds"], "checks.martingale.seeds");
      if (c["min_pass_fraction"]) {
        cfg.martingale.min_pass_fraction = r.number(c["min_pass_fraction"], "checks.martingale.min_pass_fraction");
      }
      if (const auto nc = c["negative_control"]) {
        r.expect_keys(nc, "checks.martingale.negative_control", {"epsilon_stderr", "location"});
        NegativeControlConfig control;
        if (nc["epsilon_stderr"]) {
          control.epsilon_stderr = r.number(nc["epsilon_stderr"], "negative_control.epsilon_stderr");
        }
        if (nc["location"]) {
          const double loc = r.number(nc["location"], "negative_control.location");
          if (!(loc > 0.0) || loc > grid.window()) r.fail(nc["location"], "negative_control.location must lie in (0, window]");
          control.location = loc;
        }
        cfg.martingale.negative_control = control;
      }
    }
    if (const auto c = checks["bank_account"]) {
      r.expect_keys(c, "checks.bank_account",
                    {"step", "subdivisions", "finest_tolerance", "monotone_slack", "telescoping_tolerance"});
      if (c["step"]) {
        const auto step = r.positive(c["step"], "checks.bank_account.step");
        if (step > time.n_steps) r.fail(c["step"], "checks.bank_account.step exceeds time.n_steps");
        cfg.bank_account.step = step;
      }
      if (const auto s = c["subdivisions"]) {
        if (!s.IsSequence()) r.fail(s, "checks.bank_account.subdivisions must be a list");
        const std::size_t step = cfg.bank_account.step.value_or(time.n_steps);
        for (std::size_t i = 0; i < s.size(); ++i) {
          const auto n = r.positive(s[i], "checks.bank_account.subdivisions entry");
          if (step % n != 0) r.fail(s[i], fmt::format("subdivision count {} does not divide step {}", n, step));
          cfg.bank_account.subdivisions.push_back(n);
        }
      }
      if (c["finest_tolerance"]) cfg.bank_account.finest_tolerance = r.number(c["finest_tolerance"], "finest_tolerance");
      if (c["monotone_slack"]) cfg.bank_account.monotone_slack = r.number(c["monotone_slack"], "monotone_slack");
      if (c["telescoping_tolerance"]) {
        cfg.bank_account.telescoping_tolerance = r.number(c["telescoping_tolerance"], "telescoping_tolerance");
      }
    }
    if (const auto c = checks["picard"]) {
      r.expect_keys(c, "checks.picard", {"max_iterations", "tolerance", "split_on_expansion", "paths"});
      if (c["max_iterations"]) cfg.picard.max_iterations = r.positive(c["max_iterations"], "checks.picard.max_iterations");
      if (c["tolerance"]) cfg.picard.tolerance = r.number(c["tolerance"], "checks.picard.tolerance");
      if (c["split_on_expansion"]) cfg.picard.split_on_expansion = r.flag(c["split_on_expansion"], "split_on_expansion");
      if (c["paths"]) cfg.picard.n_paths = r.positive(c["paths"], "checks.picard.paths");
    }
    if (const auto c = checks["ito_isometry"]) {
      r.expect_keys(c, "checks.ito_isometry",
                    {"factors", "dim", "n_steps", "dt", "paths", "seeds", "seed", "integrand_seed",
                     "min_pass_fraction", "anticipating_control"});
      auto& o = cfg.ito_isometry;
      if (c["factors"]) o.factors = r.positive(c["factors"], "ito_isometry.factors");
      if (c["dim"]) o.dim = r.positive(c["dim"], "ito_isometry.dim");
      if (c["n_steps"]) o.n_steps = r.positive(c["n_steps"], "ito_isometry.n_steps");
      if (c["dt"]) {
        o.dt = r.number(c["dt"], "ito_isometry.dt");
        if (!(o.dt > 0.0)) r.fail(c["dt"], "ito_isometry.dt must be positive");
      }
      if (c["paths"]) o.n_paths = r.positive(c["paths"], "ito_isometry.paths");
      if (c["seeds"]) o.seeds = r.positive(c["seeds"], "ito_isometry.seeds");
      if (c["seed"]) o.seed = r.unsigned_int(c["seed"], "ito_isometry.seed");
      if (c["integrand_seed"]) o.integrand_seed = r.unsigned_int(c["integrand_seed"], "ito_isometry.integrand_seed");
      if (c["min_pass_fraction"]) o.min_pass_fraction = r.number(c["min_pass_fraction"], "ito_isometry.min_pass_fraction");
      if (c["anticipating_control"]) o.anticipating_control = r.flag(c["anticipating_control"], "anticipating_control");
    }
    if (const auto c = checks["dirac"]) {
      r.expect_keys(c, "checks.dirac", {"t", "base_steps", "refinements", "paths", "seed", "ratio_low", "ratio_high"});
      auto& o = cfg.dirac;
      if (c["t"]) {
        o.t = r.number(c["t"], "dirac.t");
        if (!(o.t > 0.0)) r.fail(c["t"], "dirac.t must be positive");
      }
      if (c["base_steps"]) o.base_steps = r.positive(c["base_steps"], "dirac.base_steps");
      if (c["refinements"]) o.refinements = r.positive(c["refinements"], "dirac.refinements");
      if (c["paths"]) o.n_paths = r.positive(c["paths"], "dirac.paths");
      if (c["seed"]) o.seed = r.unsigned_int(c["seed"], "dirac.seed");
      if (c["ratio_low"]) o.ratio_low = r.number(c["ratio_low"], "dirac.ratio_low");
      if (c["ratio_high"]) o.ratio_high = r.number(c["ratio_high"], "dirac.ratio_high");
    }
    if (const auto c = checks["cylindrify"]) {
      r.expect_keys(c, "checks.cylindrify", {"instances", "max_dim", "max_dim_e", "samples", "seed", "tolerance"});
      auto& o = cfg.cylindrify;
      if (c["instances"]) o.instances = r.positive(c["instances"], "cylindrify.instances");
      if (c["max_dim"]) o.max_dim = r.positive(c["max_dim"], "cylindrify.max_dim");
      if (c["max_dim_e"]) o.max_dim_e = r.positive(c["max_dim_e"], "cylindrify.max_dim_e");
      if (c["samples"]) o.samples = r.unsigned_int(c["samples"], "cylindrify.samples");
      if (c["seed"]) o.seed = r.unsigned_int(c["seed"], "cylindrify.seed");
      if (c["tolerance"]) o.tolerance = r.number(c["tolerance"], "cylindrify.tolerance");
    }
  }

  nlohmann::json doc = to_json(root);
  doc.erase("output_dir");
  cfg.canonical = doc.dump();
  cfg.hash = fnv1a_hex(cfg.canonical);
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("{}: cannot open scenario file", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.string());
}

HJMModel ScenarioConfig::model() const {
  return HJMModel{rates.x0, build_example_coefficients(rates.spec, rates.drift), energy.x0,
                  build_example_coefficients(energy.spec, DriftRule::zero)};
}

BrownianDriver ScenarioConfig::sample_driver(std::uint64_t seed_offset) const {
  return sample_driver(driver.seed + seed_offset, driver.n_paths);
}

BrownianDriver ScenarioConfig::sample_driver(std::uint64_t seed, std::size_t n_paths) const {
  return sample_increments(driver.factors, time.n_steps, time.dt, n_paths, seed);
}

}  // namespace cylhjm::cli

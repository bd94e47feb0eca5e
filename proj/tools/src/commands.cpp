#include "cylhjm/cli/commands.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "cylhjm/integration.hpp"
#include "cylhjm/measure_json.hpp"
#include "cylhjm/parallel.hpp"

namespace cylhjm::cli {

namespace {

namespace fs = std::filesystem;
using Cell = CsvWriter::Cell;

Cell integer(std::size_t v) { return static_cast<long long>(v); }

std::size_t required_count(double fraction, std::size_t total) {
  const double need = std::ceil(fraction * static_cast<double>(total) - 1e-9);
  return static_cast<std::size_t>(std::clamp(need, 0.0, static_cast<double>(total)));
}

// Linear interpolation between order statistics.
double quantile(std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

bool rates_trivial(const ScenarioConfig& cfg) { return cfg.rates.x0.is_zero() && cfg.rates.spec.terms.empty(); }

bool has_energy(const ScenarioConfig& cfg) {
  return !cfg.buckets.empty() || !cfg.energy.x0.is_zero() || !cfg.energy.spec.terms.empty();
}

/// Streams single paths of both components through reusable buffers.
class Simulator {
 public:
  struct Buffers {
    std::vector<SignedMeasure> rates;
    std::vector<SignedMeasure> energy;
    std::vector<double> consumed;
    std::vector<double> log_bank;
  };

  Simulator(const HJMModel& model, const BrownianDriver& driver, bool with_energy)
      : model_(model), driver_(driver), solver_(model.rates_x0.grid(), model.rates, driver), with_energy_(with_energy) {
    if (model.energy.factors != driver.factors()) {
      throw GridMismatch("energy coefficients and driver have different factor counts");
    }
    if (with_energy_ && model.energy.state_independent) {
      for (std::size_t j = 0; j < driver.n_steps(); ++j) energy_cache_.push_back(model.energy.evaluate({}, j));
    }
  }

  const PathSolver& solver() const { return solver_; }

  StepCoefficients energy_coefficients(std::span<const SignedMeasure> rate_history, std::size_t j) const {
    return energy_cache_.empty() ? model_.energy.evaluate(rate_history, j) : energy_cache_[j];
  }

  void run(std::size_t p, Buffers& b) const {
    const std::size_t n = driver_.n_steps();
    b.rates.assign(n + 1, model_.rates_x0);
    b.consumed.assign(n, 0.0);
    solver_.solve(p, b.rates, b.consumed);
    b.log_bank.assign(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) b.log_bank[j + 1] = b.log_bank[j] + b.consumed[j];
    if (!with_energy_) return;
    b.energy.assign(n + 1, model_.energy_x0);
    const double dt = driver_.grid().dt;
    for (std::size_t j = 0; j < n; ++j) {
      const StepCoefficients c = energy_coefficients(std::span(b.rates).first(j + 1), j);
      b.energy[j + 1] = b.energy[j];
      b.energy[j + 1].axpy(dt, c.drift);
      const auto dw = driver_.increment(p, j);
      for (std::size_t k = 0; k < dw.size(); ++k) b.energy[j + 1].axpy(dw[k], c.vol.components[k]);
      if (!all_finite(b.energy[j + 1])) throw NumericalBlowUp(j + 1, p, "energy component is not finite");
    }
  }

 private:
  const HJMModel& model_;
  const BrownianDriver& driver_;
  PathSolver solver_;
  bool with_energy_;
  std::vector<StepCoefficients> energy_cache_;
};

// ---------------------------------------------------------------------------

Report simulate(const ScenarioConfig& cfg, const fs::path& out) {
  const HJMModel model = cfg.model();
  const BrownianDriver driver = cfg.sample_driver();
  const bool energy = has_energy(cfg);
  const Simulator sim(model, driver, energy);
  const std::size_t n = driver.n_steps();
  const std::size_t paths = driver.n_paths();

  struct Functional {
    std::string id;
    std::function<double(const Simulator::Buffers&, std::size_t)> value;
  };
  std::vector<Functional> fns;
  for (double x : cfg.maturities) {
    fns.push_back({"forward_mass:" + format_real(x),
                   [x](const auto& b, std::size_t j) { return eval_interval(b.rates[j], 0.0, x); }});
  }
  for (double T : cfg.maturities) {
    fns.push_back({"log_bond:" + format_real(T), [T, &cfg](const auto& b, std::size_t j) {
                     const double t = cfg.time.time(j);
                     return t > T + 1e-12 ? std::nan("") : eval_interval(b.rates[j], 0.0, std::max(T - t, 0.0));
                   }});
  }
  fns.push_back({"log_bank", [](const auto& b, std::size_t j) { return b.log_bank[j]; }});
  for (std::size_t i = 0; i < cfg.rates.spec.test_functions.size(); ++i) {
    const auto& f = cfg.rates.spec.test_functions[i];
    fns.push_back({"test_function:" + std::to_string(i),
                   [&f](const auto& b, std::size_t j) { return pair_with_function(b.rates[j], f); }});
  }
  if (energy) {
    for (const auto& k : cfg.buckets) {
      fns.push_back({"future:" + format_real(k.t1) + ":" + format_real(k.t2),
                     [k](const auto& b, std::size_t j) { return eval_interval(b.energy[j], k.t1, k.t2); }});
    }
  }

  const std::size_t terminal = std::min(cfg.simulate.terminal_paths, paths);
  std::vector<double> values(fns.size() * (n + 1) * paths);
  std::vector<SignedMeasure> terminal_rates(terminal, model.rates_x0);
  std::vector<SignedMeasure> terminal_energy(terminal, model.energy_x0);
  parallel_for(paths, [&](std::size_t p) {
    thread_local Simulator::Buffers b;
    sim.run(p, b);
    for (std::size_t f = 0; f < fns.size(); ++f) {
      for (std::size_t j = 0; j <= n; ++j) values[(f * (n + 1) + j) * paths + p] = fns[f].value(b, j);
    }
    if (p < terminal) {
      terminal_rates[p] = b.rates[n];
      if (energy) terminal_energy[p] = b.energy[n];
    }
  });

  bool finite = true;
  CsvWriter csv(out / "simulate.csv", {"step", "t", "functional_id", "mean", "sd", "q05", "q95"});
  std::vector<double> sample;
  for (std::size_t j = 0; j <= n; ++j) {
    for (std::size_t f = 0; f < fns.size(); ++f) {
      const double* v = &values[(f * (n + 1) + j) * paths];
      if (std::isnan(v[0]) && fns[f].id.starts_with("log_bond")) continue;  // past maturity
      sample.assign(v, v + paths);
      const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(paths);
      double ss = 0.0;
      for (double x : sample) {
        finite = finite && std::isfinite(x);
        ss += (x - mean) * (x - mean);
      }
      const double sd = paths > 1 ? std::sqrt(ss / static_cast<double>(paths - 1)) : 0.0;
      std::sort(sample.begin(), sample.end());
      csv.row({integer(j), cfg.time.time(j), fns[f].id, mean, sd, quantile(sample, 0.05), quantile(sample, 0.95)});
    }
  }

  nlohmann::json terminal_json = {{"step", n}, {"t", cfg.time.horizon()}, {"rates", nlohmann::json::array()}};
  for (const auto& m : terminal_rates) terminal_json["rates"].push_back(to_json(m));
  if (energy) {
    terminal_json["energy"] = nlohmann::json::array();
    for (const auto& m : terminal_energy) terminal_json["energy"].push_back(to_json(m));
  }
  std::ofstream(out / "simulate_terminal.json", std::ios::binary) << terminal_json.dump(2) << '\n';

  Report report;
  report.checks.push_back({"finite_series", finite,
                           {{"paths", paths}, {"steps", n}, {"functionals", fns.size()}, {"terminal_paths", terminal}}});
  return report;
}

// ---------------------------------------------------------------------------

Report check_drift(const ScenarioConfig& cfg, const fs::path& out) {
  const HJMModel model = cfg.model();
  const BrownianDriver driver = cfg.sample_driver();
  const bool energy = has_energy(cfg);
  const Simulator sim(model, driver, energy);
  const std::size_t n = driver.n_steps();
  const std::size_t paths = driver.n_paths();

  // Per (path, step) gaps; state-independent coefficients only need one evaluation per step.
  std::vector<double> gaps(paths * n, 0.0), energy_drift(paths * n, 0.0);
  if (model.rates.state_independent && (!energy || model.energy.state_independent)) {
    for (std::size_t j = 0; j < n; ++j) {
      const double g = drift_condition_gap(*sim.solver().cached(j));
      const double e = energy ? total_variation(sim.energy_coefficients({}, j).drift) : 0.0;
      for (std::size_t p = 0; p < paths; ++p) {
        gaps[p * n + j] = g;
        energy_drift[p * n + j] = e;
      }
    }
  } else {
    parallel_for(paths, [&](std::size_t p) {
      thread_local Simulator::Buffers b;
      sim.run(p, b);
      for (std::size_t j = 0; j < n; ++j) {
        const auto history = std::span<const SignedMeasure>(b.rates).first(j + 1);
        gaps[p * n + j] = drift_condition_gap(sim.solver().coefficients(history, j));
        if (energy) energy_drift[p * n + j] = total_variation(sim.energy_coefficients(history, j).drift);
      }
    });
  }

  CsvWriter csv(out / "check_drift.csv", {"step", "t", "max_gap", "max_energy_drift_tv"});
  double worst = 0.0, worst_energy = 0.0;
  std::size_t worst_step = 0, worst_path = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double g = 0.0, e = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
      g = std::max(g, gaps[p * n + j]);
      e = std::max(e, energy_drift[p * n + j]);
      if (gaps[p * n + j] > worst) {
        worst = gaps[p * n + j];
        worst_step = j;
        worst_path = p;
      }
    }
    worst_energy = std::max(worst_energy, e);
    csv.row({integer(j), cfg.time.time(j), g, e});
  }

  const double tol = cfg.drift_check.tolerance;
  Report report;
  report.checks.push_back({"rates_drift_condition",
                           worst < tol,
                           {{"max_gap", worst},
                            {"tolerance", tol},
                            {"worst_step", worst_step},
                            {"worst_path", worst_path},
                            {"paths", paths},
                            {"steps", n}}});
  if (energy) {
    report.checks.push_back({"energy_futures_drift_zero", worst_energy < tol,
                             {{"max_drift_total_variation", worst_energy}, {"tolerance", tol}}});
  }
  return report;
}

// ---------------------------------------------------------------------------

Report martingale_test(const ScenarioConfig& cfg, const fs::path& out) {
  const HJMModel model = cfg.model();
  const auto& mc = cfg.martingale;
  MartingaleExperiment experiment{cfg.maturities, cfg.checkpoints, cfg.buckets, std::nullopt};
  const bool energy = !cfg.buckets.empty();
  const bool discounted_exact = rates_trivial(cfg);

  CsvWriter csv(out / "martingale_test.csv",
                {"seed", "run", "kind", "maturity_or_t1", "t2", "checkpoint", "reference", "mean", "mean_gap",
                 "stderr", "pass"});
  auto emit = [&](std::uint64_t seed, const std::string& run, const MartingaleReport& r) {
    for (const auto& b : r.bonds) {
      csv.row({static_cast<long long>(seed), run, std::string("bond"), b.maturity, b.maturity, b.checkpoint,
               b.check.reference, b.check.mean, b.check.mean_gap, b.check.standard_error, b.check.pass});
    }
    for (const auto& f : r.futures) {
      for (const auto& [kind, c] : {std::pair{"future", &f.price}, std::pair{"future_discounted", &f.discounted}}) {
        csv.row({static_cast<long long>(seed), run, std::string(kind), f.bucket.t1, f.bucket.t2, f.checkpoint,
                 c->reference, c->mean, c->mean_gap, c->standard_error, c->pass});
      }
    }
  };

  std::size_t bond_ok = 0, price_ok = 0, disc_ok = 0, detected = 0;
  double worst_ratio = 0.0;
  nlohmann::json control_eps = nlohmann::json::array();
  for (std::size_t s = 0; s < mc.seeds; ++s) {
    const std::uint64_t seed = cfg.driver.seed + s;
    const BrownianDriver driver = cfg.sample_driver(s);
    const MartingaleReport r = run_martingale_experiment(model, driver, experiment);
    emit(seed, "base", r);
    bond_ok += r.all_bonds_pass() ? 1 : 0;
    for (const auto& b : r.bonds) {
      if (b.check.standard_error > 0.0) worst_ratio = std::max(worst_ratio, b.check.mean_gap / b.check.standard_error);
    }
    price_ok += std::all_of(r.futures.begin(), r.futures.end(), [](const auto& f) { return f.price.pass; }) ? 1 : 0;
    disc_ok += std::all_of(r.futures.begin(), r.futures.end(), [](const auto& f) { return f.discounted.pass; }) ? 1 : 0;

    if (mc.negative_control && !r.bonds.empty()) {
      // Longest maturity, latest checkpoint.
      const BondCheck* ref = &r.bonds.front();
      for (const auto& b : r.bonds) {
        if (b.maturity > ref->maturity || (b.maturity == ref->maturity && b.checkpoint > ref->checkpoint)) ref = &b;
      }
      const double eps = mc.negative_control->epsilon_stderr * ref->check.standard_error / ref->maturity;
      const double loc = mc.negative_control->location.value_or(cfg.grid.cell_width());
      MartingaleExperiment perturbed{cfg.maturities, cfg.checkpoints, {}, SignedMeasure::dirac(cfg.grid, loc, eps)};
      const MartingaleReport rc = run_martingale_experiment(model, driver, perturbed);
      emit(seed, "negative_control", rc);
      detected += rc.all_bonds_pass() ? 0 : 1;
      control_eps.push_back(eps);
    }
  }

  const std::size_t need = required_count(mc.min_pass_fraction, mc.seeds);
  Report report;
  report.checks.push_back({"bond_martingale",
                           bond_ok >= need,
                           {{"seeds", mc.seeds},
                            {"seeds_passing", bond_ok},
                            {"required", need},
                            {"paths", cfg.driver.n_paths},
                            {"worst_gap_over_stderr", worst_ratio}}});
  if (energy) {
    nlohmann::json metrics = {{"seeds", mc.seeds}, {"seeds_passing", price_ok}, {"required", need},
                              {"discounted_seeds_passing", disc_ok}};
    report.checks.push_back({"futures_price_martingale", price_ok >= need, metrics});
    // Dividing by the bank account keeps the martingale property only when rates vanish.
    if (discounted_exact) {
      report.checks.push_back({"futures_discounted_martingale", disc_ok >= need,
                               {{"seeds", mc.seeds}, {"seeds_passing", disc_ok}, {"required", need}}});
    }
  }
  if (mc.negative_control) {
    report.checks.push_back({"negative_control_detected",
                             detected >= need,
                             {{"seeds", mc.seeds},
                              {"seeds_detecting", detected},
                              {"required", need},
                              {"epsilon", control_eps},
                              {"epsilon_stderr", mc.negative_control->epsilon_stderr}}});
  }
  return report;
}

// ---------------------------------------------------------------------------

Report bank_account_convergence(const ScenarioConfig& cfg, const fs::path& out) {
  const HJMModel model = cfg.model();
  const BrownianDriver driver = cfg.sample_driver();
  const std::size_t step = cfg.bank_account.step.value_or(cfg.time.n_steps);
  std::vector<std::size_t> subs = cfg.bank_account.subdivisions;
  if (subs.empty()) {
    for (std::size_t m = 2; m <= step; m *= 2) {
      if (step % m == 0) subs.push_back(m);
    }
    if (subs.empty() || subs.back() != step) subs.push_back(step);
  }
  std::sort(subs.begin(), subs.end());
  subs.erase(std::unique(subs.begin(), subs.end()), subs.end());

  const MildPath x = euler_mild_solve(model.rates_x0, model.rates, driver);
  const std::vector<double> closed = log_bank_account_closed(x, model.rates, driver, step);
  auto error_at = [&](std::size_t m, double& mean_log) {
    const auto disc = log_bank_account_discrete(x, step, m);
    double e = 0.0;
    mean_log = 0.0;
    for (std::size_t p = 0; p < disc.size(); ++p) {
      e = std::max(e, std::abs(disc[p] - closed[p]));
      mean_log += disc[p] / static_cast<double>(disc.size());
    }
    return e;
  };
  double mean_closed = 0.0;
  for (double v : closed) mean_closed += v / static_cast<double>(closed.size());

  CsvWriter csv(out / "bank_account_convergence.csv", {"subdivisions", "max_abs_log_error", "mean_log_bank_discrete",
                                                       "mean_log_bank_closed"});
  std::vector<double> errors;
  for (std::size_t m : subs) {
    double mean_log = 0.0;
    errors.push_back(error_at(m, mean_log));
    csv.row({integer(m), errors.back(), mean_log, mean_closed});
  }
  double unused = 0.0;
  const double finest = error_at(step, unused);
  bool monotone = true;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    monotone = monotone && errors[i] <= errors[i - 1] + cfg.bank_account.monotone_slack;
  }

  Report report;
  report.checks.push_back({"finest_subdivision_matches_closed_form",
                           finest < cfg.bank_account.finest_tolerance,
                           {{"step", step}, {"error", finest}, {"tolerance", cfg.bank_account.finest_tolerance}}});
  report.checks.push_back({"error_nonincreasing",
                           monotone,
                           {{"subdivisions", subs}, {"errors", errors}, {"slack", cfg.bank_account.monotone_slack}}});
  if (cfg.rates.spec.terms.empty()) {
    // F = G = 0: every subdivision telescopes to the closed form.
    double worst = error_at(1, unused);
    for (double e : errors) worst = std::max(worst, e);
    report.checks.push_back({"telescoping_exact", worst < cfg.bank_account.telescoping_tolerance,
                             {{"max_error", worst}, {"tolerance", cfg.bank_account.telescoping_tolerance}}});
  }
  return report;
}

// ---------------------------------------------------------------------------

double squared_norm_mean(const std::vector<Eigen::VectorXd>& v, double& stderr_out) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (const auto& x : v) mean += x.squaredNorm() / n;
  double ss = 0.0;
  for (const auto& x : v) ss += (x.squaredNorm() - mean) * (x.squaredNorm() - mean);
  stderr_out = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return mean;
}

Report ito_isometry(const ScenarioConfig& cfg, const fs::path& out) {
  const auto& o = cfg.ito_isometry;
  std::mt19937_64 rng(o.integrand_seed);
  std::normal_distribution<double> normal;
  std::vector<Eigen::MatrixXd> integrand;
  for (std::size_t j = 0; j < o.n_steps; ++j) {
    Eigen::MatrixXd a(o.dim, o.factors);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = normal(rng);
    }
    integrand.push_back(std::move(a));
  }

  CsvWriter csv(out / "ito_isometry.csv", {"seed", "exact", "mc", "stderr", "gap_over_stderr", "pass"});
  std::size_t passing = 0;
  IsometryGap first;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    const auto driver = sample_increments(o.factors, o.n_steps, o.dt, o.n_paths, o.seed + s);
    const IsometryGap gap = ito_isometry_gap(integrand, driver);
    if (s == 0) first = gap;
    passing += gap.pass ? 1 : 0;
    csv.row({static_cast<long long>(o.seed + s), gap.exact_value, gap.mc_second_moment, gap.standard_error,
             gap.gap_in_stderr, gap.pass});
  }
  const std::size_t need = required_count(o.min_pass_fraction, o.seeds);

  Report report;
  report.checks.push_back({"isometry",
                           passing >= need,
                           {{"exact", first.exact_value},
                            {"mc", first.mc_second_moment},
                            {"stderr", first.standard_error},
                            {"seeds", o.seeds},
                            {"seeds_passing", passing},
                            {"required", need}}});

  if (o.anticipating_control) {
    // A_j built from the very increment it multiplies.
    const auto driver = sample_increments(o.factors, o.n_steps, o.dt, o.n_paths, o.seed);
    const double scale = 1.0 / std::sqrt(o.dt);
    const auto values = ito_step_integral(
        [&](std::size_t j, std::size_t p) {
          const auto dw = driver.increment(p, j);
          Eigen::MatrixXd a(o.dim, o.factors);
          for (std::size_t r = 0; r < o.dim; ++r) {
            for (std::size_t c = 0; c < o.factors; ++c) a(r, c) = dw[c] * scale;
          }
          return a;
        },
        o.dim, driver);
    double se = 0.0;
    const double mc = squared_norm_mean(values, se);
    const double formula = static_cast<double>(o.n_steps * o.dim * o.factors) * o.dt;
    report.checks.push_back({"anticipating_control_detected",
                             std::abs(mc - formula) > 3.0 * se,
                             {{"exact", formula}, {"mc", mc}, {"stderr", se}}});
  }
  return report;
}

// ---------------------------------------------------------------------------

Report dirac_identity(const ScenarioConfig& cfg, const fs::path& out) {
  const auto& o = cfg.dirac;
  const double t = o.t;
  auto f = [t](double x) { return std::pow(std::sin(std::numbers::pi * x / t), 2); };
  auto fp = [t](double x) { return std::numbers::pi / t * std::sin(2.0 * std::numbers::pi * x / t); };

  BrownianDriver driver = sample_increments(1, o.base_steps, t / static_cast<double>(o.base_steps), o.n_paths, o.seed);
  std::vector<double> gaps{dirac_convolution_identity_gap(f, fp, t, driver)};
  std::vector<double> ratios;
  CsvWriter csv(out / "dirac_identity.csv", {"level", "n_steps", "dt", "gap", "ratio"});
  csv.row({integer(0), integer(driver.n_steps()), driver.grid().dt, gaps[0], std::string("")});
  bool pass = true;
  for (std::size_t level = 1; level <= o.refinements; ++level) {
    driver = refine_by_bridge(driver, level);
    gaps.push_back(dirac_convolution_identity_gap(f, fp, t, driver));
    const double ratio = gaps[level] / gaps[level - 1];
    ratios.push_back(ratio);
    pass = pass && ratio >= o.ratio_low && ratio <= o.ratio_high;
    csv.row({integer(level), integer(driver.n_steps()), driver.grid().dt, gaps[level], ratio});
  }

  Report report;
  report.checks.push_back({"gap_halves_under_refinement",
                           pass,
                           {{"exact", 0.0},
                            {"mc", gaps.back()},
                            {"stderr", nullptr},
                            {"gaps", gaps},
                            {"ratios", ratios},
                            {"ratio_bounds", {o.ratio_low, o.ratio_high}},
                            {"paths", o.n_paths}}});
  return report;
}

// ---------------------------------------------------------------------------

Report cylindrify_norm_check(const ScenarioConfig& cfg, const fs::path& out) {
  const auto& o = cfg.cylindrify;
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal;
  auto random_matrix = [&](std::size_t r, std::size_t c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = normal(rng);
    }
    return m;
  };
  std::uniform_int_distribution<std::size_t> dim(1, o.max_dim), dim_e(1, o.max_dim_e);

  CsvWriter csv(out / "cylindrify_norm_check.csv",
                {"instance", "dim_i", "dim_h", "dim_e", "opnorm_T", "opnorm_lower_witness", "max_violation"});
  double worst_equality = 0.0, worst_violation = 0.0, worst_upper = 0.0, worst_lower = 0.0;
  for (std::size_t i = 0; i < o.instances; ++i) {
    const std::size_t di = dim(rng), dh = dim(rng), de = dim_e(rng);
    const CylindricalIntegral ci = cylindrify(random_matrix(dh, di), de);
    double violation = 0.0;
    for (std::size_t s = 0; s < o.samples; ++s) {
      const Eigen::MatrixXd f = random_matrix(di, de);
      const Eigen::VectorXd e = random_matrix(de, 1).col(0);
      const double f_norm = operator_norm(f);
      violation = std::max(violation, ci.apply(f, e).norm() - ci.upper() * f_norm * e.norm());
      violation = std::max(violation, operator_norm(ci.lift(f)) - ci.upper() * f_norm);
    }
    const double equality = std::abs(ci.upper() - ci.lower());
    if (i == 0 || equality > worst_equality) {
      worst_equality = equality;
      worst_upper = ci.upper();
      worst_lower = ci.lower();
    }
    worst_violation = std::max(worst_violation, violation);
    csv.row({integer(i), integer(di), integer(dh), integer(de), ci.upper(), ci.lower(), std::max(violation, 0.0)});
  }

  Report report;
  report.checks.push_back({"witness_attains_norm",
                           worst_equality <= o.tolerance,
                           {{"opnorm_T", worst_upper},
                            {"opnorm_lower_witness", worst_lower},
                            {"max_abs_difference", worst_equality},
                            {"instances", o.instances},
                            {"tolerance", o.tolerance}}});
  report.checks.push_back({"submultiplicativity",
                           worst_violation <= o.tolerance,
                           {{"max_violation", std::max(worst_violation, 0.0)},
                            {"samples_per_instance", o.samples},
                            {"tolerance", o.tolerance}}});
  return report;
}

// ---------------------------------------------------------------------------

Report picard_diagnostics(const ScenarioConfig& cfg, const fs::path& out) {
  const HJMModel model = cfg.model();
  const auto& o = cfg.picard;
  const BrownianDriver driver = cfg.sample_driver(cfg.driver.seed, o.n_paths.value_or(cfg.driver.n_paths));
  PicardOptions options;
  options.max_iterations = o.max_iterations;
  options.tolerance = o.tolerance;
  options.split_on_expansion = o.split_on_expansion;
  const PicardResult result = picard_iterate(model.rates_x0, model.rates, driver, options);

  CsvWriter csv(out / "picard_diagnostics.csv",
                {"segment", "first_step", "last_step", "iteration", "distance", "ratio"});
  for (std::size_t s = 0; s < result.segments.size(); ++s) {
    const auto& seg = result.segments[s];
    for (std::size_t k = 0; k < seg.distances.size(); ++k) {
      csv.row({integer(s), integer(seg.first_step), integer(seg.last_step), integer(k), seg.distances[k],
               k == 0 ? Cell(std::string("")) : Cell(seg.ratios[k - 1])});
    }
  }

  const auto& ratios = result.ratios();
  bool contraction = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) contraction = contraction && ratios[i] < 1.0;

  Report report;
  report.checks.push_back({"converged",
                           result.converged && result.residual < o.tolerance,
                           {{"iterations", result.iterations},
                            {"residual", result.residual},
                            {"tolerance", o.tolerance},
                            {"max_iterations", o.max_iterations},
                            {"segments", result.segments.size()},
                            {"paths", driver.n_paths()}}});
  report.checks.push_back({"contraction_from_iteration_2", contraction, {{"ratios", ratios}}});
  if (model.rates.state_independent) {
    report.checks.push_back({"state_independent_single_step", result.iterations <= 1,
                             {{"iterations", result.iterations}}});
  }
  return report;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "simulate",     "check-drift",    "martingale-test",       "bank-account-convergence",
      "ito-isometry", "dirac-identity", "cylindrify-norm-check", "picard-diagnostics"};
  return names;
}

Report run_subcommand(const std::string& subcommand, const ScenarioConfig& config, const fs::path& out_dir) {
  using Fn = Report (*)(const ScenarioConfig&, const fs::path&);
  static const std::map<std::string, Fn> table = {
      {"simulate", simulate},
      {"check-drift", check_drift},
      {"martingale-test", martingale_test},
      {"bank-account-convergence", bank_account_convergence},
      {"ito-isometry", ito_isometry},
      {"dirac-identity", dirac_identity},
      {"cylindrify-norm-check", cylindrify_norm_check},
      {"picard-diagnostics", picard_diagnostics},
  };
  const auto it = table.find(subcommand);
  if (it == table.end()) throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
  fs::create_directories(out_dir);
  Report report = it->second(config, out_dir);
  report.subcommand = subcommand;
  report.scenario = config.name;
  report.scenario_hash = config.hash;
  std::string stem = subcommand;
  std::replace(stem.begin(), stem.end(), '-', '_');
  report.write(out_dir / (stem + ".json"));
  return report;
}

int run(const std::string& subcommand, const fs::path& config_path, const std::optional<fs::path>& out_dir,
        std::ostream& log) {
  try {
    const ScenarioConfig config = load_scenario(config_path);
    fs::path out;
    if (out_dir) {
      out = *out_dir;
    } else if (config.output_dir) {
      out = config_path.parent_path() / *config.output_dir;
    } else {
      throw ConfigError(config_path.string() + ": no output directory (set output_dir or pass --out)");
    }
    const Report report = run_subcommand(subcommand, config, out);
    for (const auto& c : report.checks) log << (c.pass ? "PASS " : "FAIL ") << c.name << '\n';
    return report.all_pass() ? kExitPass : kExitCheckFailure;
  } catch (const NumericalBlowUp& e) {
    log << "numerical blow-up at step " << e.step() << ", path " << e.path() << ": " << e.what() << '\n';
    return kExitBlowUp;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace cylhjm::cli

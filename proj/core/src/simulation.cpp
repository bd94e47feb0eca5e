#include <cmath>
#include <sstream>

#include "cylhjm/parallel.hpp"
#include "cylhjm/termstructure.hpp"

namespace cylhjm {

namespace {

std::size_t checkpoint_step(const TimeGrid& grid, double t) {
  const double steps = t / grid.dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, rounded) || rounded < 0.0 ||
      rounded > static_cast<double>(grid.n_steps)) {
    std::ostringstream os;
    os << "checkpoint " << t << " is not a time-grid point within the horizon " << grid.horizon();
    throw std::invalid_argument(os.str());
  }
  return static_cast<std::size_t>(rounded);
}

CoefficientMap perturbed(const CoefficientMap& base, const std::optional<SignedMeasure>& extra) {
  if (!extra) return base;
  CoefficientMap out = base;
  out.evaluate = [evaluate = base.evaluate, extra = *extra](std::span<const SignedMeasure> history,
                                                           std::size_t step) {
    StepCoefficients c = evaluate(history, step);
    c.drift.axpy(1.0, extra);
    return c;
  };
  return out;
}

}  // namespace

MartingaleReport run_martingale_experiment(const HJMModel& model, const BrownianDriver& driver,
                                           const MartingaleExperiment& experiment) {
  const CoefficientMap rates = perturbed(model.rates, experiment.drift_perturbation);
  const PathSolver solver(model.rates_x0.grid(), rates, driver);
  if (model.energy.factors != driver.factors()) {
    throw GridMismatch("energy coefficients and driver have different factor counts");
  }
  std::vector<StepCoefficients> energy_cache;
  if (model.energy.state_independent) {
    for (std::size_t j = 0; j < driver.n_steps(); ++j) energy_cache.push_back(model.energy.evaluate({}, j));
  }

  std::vector<std::size_t> steps;
  for (double t : experiment.checkpoints) steps.push_back(checkpoint_step(driver.grid(), t));

  MartingaleReport report;
  std::vector<std::pair<std::size_t, std::size_t>> bond_keys;  // (maturity, checkpoint)
  for (std::size_t m = 0; m < experiment.maturities.size(); ++m) {
    const double maturity = experiment.maturities[m];
    for (std::size_t c = 0; c < steps.size(); ++c) {
      if (experiment.checkpoints[c] <= maturity + 1e-12) {
        bond_keys.emplace_back(m, c);
        report.bonds.push_back({maturity, experiment.checkpoints[c], {}});
      }
    }
  }
  for (const auto& bucket : experiment.buckets) {
    if (bucket.t1 > bucket.t2) throw std::invalid_argument("futures bucket needs T1 <= T2");
    for (double t : experiment.checkpoints) report.futures.push_back({bucket, t, {}, {}});
  }

  const std::size_t n_paths = driver.n_paths();
  const std::size_t n = driver.n_steps();
  std::vector<std::vector<double>> bond_samples(bond_keys.size(), std::vector<double>(n_paths));
  std::vector<std::vector<double>> price_samples(report.futures.size(), std::vector<double>(n_paths));
  std::vector<std::vector<double>> disc_samples(report.futures.size(), std::vector<double>(n_paths));
  const double dt = driver.grid().dt;

  parallel_for(n_paths, [&](std::size_t p) {
    thread_local std::vector<SignedMeasure> states;
    thread_local std::vector<SignedMeasure> energy;
    thread_local std::vector<double> consumed;
    states.assign(n + 1, model.rates_x0);
    consumed.assign(n, 0.0);
    solver.solve(p, states, consumed);

    std::vector<double> log_bank(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) log_bank[j + 1] = log_bank[j] + consumed[j];

    for (std::size_t b = 0; b < bond_keys.size(); ++b) {
      const auto [m, c] = bond_keys[b];
      const std::size_t j = steps[c];
      const double y = std::max(experiment.maturities[m] - driver.grid().time(j), 0.0);
      bond_samples[b][p] = std::exp(-eval_interval(states[j], 0.0, y) - log_bank[j]);
    }

    if (report.futures.empty()) return;
    energy.assign(n + 1, model.energy_x0);
    for (std::size_t j = 0; j < n; ++j) {
      const StepCoefficients c = energy_cache.empty()
                                     ? model.energy.evaluate(std::span(states).first(j + 1), j)
                                     : energy_cache[j];
      energy[j + 1] = energy[j];
      energy[j + 1].axpy(dt, c.drift);
      auto dw = driver.increment(p, j);
      for (std::size_t k = 0; k < dw.size(); ++k) energy[j + 1].axpy(dw[k], c.vol.components[k]);
    }
    std::size_t f = 0;
    for (const auto& bucket : experiment.buckets) {
      for (std::size_t c = 0; c < steps.size(); ++c, ++f) {
        const std::size_t j = steps[c];
        const double price = eval_interval(energy[j], bucket.t1, bucket.t2);
        price_samples[f][p] = price;
        disc_samples[f][p] = price * std::exp(-log_bank[j]);
      }
    }
  });

  for (std::size_t b = 0; b < bond_keys.size(); ++b) {
    const double reference = std::exp(-eval_interval(model.rates_x0, 0.0, report.bonds[b].maturity));
    report.bonds[b].check = martingale_check(reference, bond_samples[b]);
  }
  for (std::size_t f = 0; f < report.futures.size(); ++f) {
    const auto& bucket = report.futures[f].bucket;
    const double reference = eval_interval(model.energy_x0, bucket.t1, bucket.t2);
    report.futures[f].price = martingale_check(reference, price_samples[f]);
    report.futures[f].discounted = martingale_check(reference, disc_samples[f]);
  }
  return report;
}

}  // namespace cylhjm

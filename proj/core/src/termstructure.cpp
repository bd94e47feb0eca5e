#include "cylhjm/termstructure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cylhjm/parallel.hpp"

namespace cylhjm {

double Loading::operator()(std::span<const double> z) const {
  if (is_constant()) return constant;
  double dot = 0.0;
  for (std::size_t i = 0; i < slope.size(); ++i) dot += slope[i] * z[i];
  return constant + saturation * std::tanh(dot / saturation);
}

bool Loading::is_constant() const {
  return std::all_of(slope.begin(), slope.end(), [](double a) { return a == 0.0; });
}

double Loading::bound() const {
  return std::abs(constant) + (is_constant() ? 0.0 : saturation);
}

double Loading::lipschitz() const {
  double s = 0.0;
  for (double a : slope) s += a * a;
  return std::sqrt(s);
}

void ExampleCoefficientSpec::validate() const {
  if (factors == 0) throw std::invalid_argument("coefficient spec needs at least one factor");
  for (std::size_t i = 0; i < test_functions.size(); ++i) {
    if (test_functions[i].cell_values.size() != grid.n_cells()) {
      throw std::invalid_argument("test function " + std::to_string(i) + " has " +
                                  std::to_string(test_functions[i].cell_values.size()) +
                                  " cells, the maturity grid has " + std::to_string(grid.n_cells()));
    }
  }
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& term = terms[t];
    const std::string where = "volatility term " + std::to_string(t);
    if (term.factor >= factors) {
      throw std::invalid_argument(where + " refers to factor " + std::to_string(term.factor) +
                                  " but only " + std::to_string(factors) + " exist");
    }
    if (!(term.base.grid() == grid)) {
      throw std::invalid_argument(where + " has a base measure on a different maturity grid");
    }
    if (!term.loading.slope.empty() && term.loading.slope.size() != test_functions.size()) {
      throw std::invalid_argument(where + " has " + std::to_string(term.loading.slope.size()) +
                                  " slopes for " + std::to_string(test_functions.size()) +
                                  " state functionals");
    }
    if (!term.loading.is_constant() && !(term.loading.saturation > 0.0)) {
      throw std::invalid_argument(where + " is state dependent but has no positive saturation bound");
    }
  }
}

bool ExampleCoefficientSpec::state_independent() const {
  return std::all_of(terms.begin(), terms.end(),
                     [](const VolTerm& t) { return t.loading.is_constant(); });
}

VolatilityValue example_volatility(const ExampleCoefficientSpec& spec, const SignedMeasure& state) {
  std::vector<double> z;
  z.reserve(spec.test_functions.size());
  for (const auto& e : spec.test_functions) z.push_back(pair_with_function(state, e));
  VolatilityValue vol = VolatilityValue::zero(spec.grid, spec.factors);
  for (const auto& term : spec.terms) vol.components[term.factor].axpy(term.loading(z), term.base);
  return vol;
}

SignedMeasure hjm_drift(const VolatilityValue& vol) {
  if (vol.components.empty()) throw std::invalid_argument("volatility value has no components");
  SignedMeasure drift(vol.components.front().grid());
  for (const auto& c : vol.components) drift.axpy(1.0, mul_distribution(c));
  return drift;
}

CoefficientMap build_example_coefficients(const ExampleCoefficientSpec& spec, DriftRule rule) {
  spec.validate();
  CoefficientMap map;
  map.factors = spec.factors;
  map.state_independent = spec.state_independent();

  double functional_norm = 0.0;
  for (const auto& e : spec.test_functions) functional_norm += e.sup_norm() * e.sup_norm();
  functional_norm = std::sqrt(functional_norm);
  double vol_bound = 0.0;
  for (const auto& term : spec.terms) {
    const double tv = total_variation(term.base);
    map.lipschitz_vol += term.loading.lipschitz() * tv * functional_norm;
    vol_bound += term.loading.bound() * tv;
  }
  map.lipschitz_drift = rule == DriftRule::hjm ? vol_bound * map.lipschitz_vol : 0.0;

  map.evaluate = [spec, rule](std::span<const SignedMeasure> history, std::size_t) {
    VolatilityValue vol = history.empty() ? example_volatility(spec, SignedMeasure(spec.grid))
                                          : example_volatility(spec, history.back());
    SignedMeasure drift = rule == DriftRule::hjm ? hjm_drift(vol) : SignedMeasure(spec.grid);
    return StepCoefficients{std::move(drift), std::move(vol)};
  };
  return map;
}

// ---------------------------------------------------------------------------

double drift_condition_gap(const StepCoefficients& c) {
  const auto& grid = c.drift.grid();
  const auto drift = cumulative_at_boundaries(c.drift);
  std::vector<std::vector<double>> vols;
  vols.reserve(c.vol.factors());
  for (const auto& v : c.vol.components) vols.push_back(cumulative_at_boundaries(v));

  double gap = 0.0;
  for (std::size_t b = 0; b < drift.size(); ++b) {
    double half_sq = 0.0;
    for (const auto& v : vols) half_sq += 0.5 * v[b] * v[b];
    gap = std::max(gap, std::abs(drift[b] - half_sq));
  }

  auto check_at = [&](double coord) {
    const double x = coord * grid.cell_width();
    gap = std::max(gap, std::abs(eval_interval(c.drift, 0.0, x) - 0.5 * c.vol.norm_sq(x)));
  };
  for (double coord : c.drift.atom_coords()) check_at(coord);
  for (const auto& v : c.vol.components) {
    for (double coord : v.atom_coords()) check_at(coord);
  }
  return gap;
}

double drift_condition_gap(const CoefficientMap& coeffs, const MildPath& x) {
  std::vector<double> per_path(x.n_paths(), 0.0);
  parallel_for(x.n_paths(), [&](std::size_t p) {
    double worst = 0.0;
    for (std::size_t j = 0; j < x.n_steps(); ++j) {
      worst = std::max(worst, drift_condition_gap(coeffs.evaluate(x.history(p, j), j)));
    }
    per_path[p] = worst;
  });
  return *std::max_element(per_path.begin(), per_path.end());
}

MildPath solve_energy(const SignedMeasure& energy_x0, const CoefficientMap& energy,
                      const MildPath& rates, const BrownianDriver& driver) {
  if (energy.factors != driver.factors()) {
    throw GridMismatch("energy coefficients and driver have different factor counts");
  }
  if (!(rates.grid() == driver.grid()) || rates.n_paths() != driver.n_paths()) {
    throw std::invalid_argument("rate path and driver shapes differ");
  }
  MildPath out(driver.grid(), driver.n_paths(), energy_x0);
  const double dt = driver.grid().dt;
  parallel_for(driver.n_paths(), [&](std::size_t p) {
    for (std::size_t j = 0; j < driver.n_steps(); ++j) {
      const StepCoefficients c = energy.evaluate(rates.history(p, j), j);
      SignedMeasure next = out.at(j, p);
      next.axpy(dt, c.drift);
      auto dw = driver.increment(p, j);
      for (std::size_t k = 0; k < dw.size(); ++k) next.axpy(dw[k], c.vol.components[k]);
      if (!all_finite(next)) {
        throw NumericalBlowUp(j, p, "non-finite energy state after step " + std::to_string(j) +
                                        " on path " + std::to_string(p));
      }
      out.at(j + 1, p) = std::move(next);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double time_to_maturity(const MildPath& x, std::size_t step, double maturity) {
  if (step > x.n_steps()) throw std::out_of_range("step beyond the time grid");
  const double y = maturity - x.grid().time(step);
  if (y < -1e-12 * std::max(1.0, maturity)) {
    std::ostringstream os;
    os << "maturity " << maturity << " lies before t = " << x.grid().time(step);
    throw std::invalid_argument(os.str());
  }
  return std::max(y, 0.0);
}

}  // namespace

std::vector<double> bond_price(const MildPath& x, std::size_t step, double maturity) {
  const double y = time_to_maturity(x, step, maturity);
  std::vector<double> out(x.n_paths());
  for (std::size_t p = 0; p < x.n_paths(); ++p) out[p] = std::exp(-eval_interval(x.at(step, p), 0.0, y));
  return out;
}

std::vector<double> energy_future(const MildPath& xe, std::size_t step, double t1, double t2) {
  if (t1 > t2) throw std::invalid_argument("futures bucket needs T1 <= T2");
  if (step > xe.n_steps()) throw std::out_of_range("step beyond the time grid");
  std::vector<double> out(xe.n_paths());
  for (std::size_t p = 0; p < xe.n_paths(); ++p) out[p] = eval_interval(xe.at(step, p), t1, t2);
  return out;
}

std::vector<double> log_bank_account_closed(const MildPath& x, const CoefficientMap& coeffs,
                                            const BrownianDriver& driver, std::size_t step) {
  if (step > x.n_steps()) throw std::out_of_range("step beyond the time grid");
  const PathSolver solver(x.maturity_grid(), coeffs, driver);
  const double dt = driver.grid().dt;
  const auto& grid = x.maturity_grid();
  std::vector<double> out(x.n_paths());
  parallel_for(x.n_paths(), [&](std::size_t p) {
    double log_b = eval_interval(x.at(0, p), 0.0, grid.boundary(step));
    for (std::size_t i = 0; i < step; ++i) {
      const double lag = grid.boundary(step - i);
      const StepCoefficients c = solver.coefficients(x.history(p, i), i);
      log_b += eval_interval(c.drift, 0.0, lag) * dt;
      auto dw = driver.increment(p, i);
      for (std::size_t k = 0; k < dw.size(); ++k) {
        log_b += eval_interval(c.vol.components[k], 0.0, lag) * dw[k];
      }
    }
    out[p] = log_b;
  });
  return out;
}

std::vector<double> bank_account_closed(const MildPath& x, const CoefficientMap& coeffs,
                                        const BrownianDriver& driver, std::size_t step) {
  auto out = log_bank_account_closed(x, coeffs, driver, step);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::vector<double> bank_account_closed(const SignedMeasure& x0, const CoefficientMap& coeffs,
                                        const BrownianDriver& driver, std::size_t step) {
  return bank_account_closed(euler_mild_solve(x0, coeffs, driver), coeffs, driver, step);
}

std::vector<double> log_bank_account_discrete(const MildPath& x, std::size_t step,
                                              std::size_t subdivisions) {
  if (step > x.n_steps()) throw std::out_of_range("step beyond the time grid");
  if (subdivisions == 0 || step % subdivisions != 0) {
    throw std::invalid_argument(std::to_string(subdivisions) + " subdivisions do not divide step " +
                                std::to_string(step));
  }
  const std::size_t stride = step / subdivisions;
  const double tenor = x.maturity_grid().boundary(stride);
  std::vector<double> out(x.n_paths(), 0.0);
  for (std::size_t p = 0; p < x.n_paths(); ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < subdivisions; ++i) s += eval_interval(x.at(i * stride, p), 0.0, tenor);
    out[p] = s;
  }
  return out;
}

std::vector<double> bank_account_discrete(const MildPath& x, std::size_t step,
                                          std::size_t subdivisions) {
  auto out = log_bank_account_discrete(x, step, subdivisions);
  for (double& v : out) v = std::exp(v);
  return out;
}

// ---------------------------------------------------------------------------

MartingaleCheck martingale_check(double reference, std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("martingale check needs samples");
  const auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var = samples.size() > 1 ? var / (n - 1.0) : 0.0;

  MartingaleCheck check;
  check.reference = reference;
  check.mean = mean;
  check.mean_gap = std::abs(mean - reference);
  check.standard_error = std::sqrt(var / n);
  check.pass = check.mean_gap < 3.0 * check.standard_error ||
               check.mean_gap <= 1e-12 * std::max(1.0, std::abs(reference));
  return check;
}

std::vector<MartingaleCheck> martingale_test(double reference,
                                             const std::vector<std::vector<double>>& samples) {
  std::vector<MartingaleCheck> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(martingale_check(reference, s));
  return out;
}

bool MartingaleReport::all_bonds_pass() const {
  return std::all_of(bonds.begin(), bonds.end(), [](const BondCheck& b) { return b.check.pass; });
}

}  // namespace cylhjm

#include "cylhjm/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cylhjm/parallel.hpp"

namespace cylhjm {

NumericalBlowUp::NumericalBlowUp(std::size_t step, std::size_t path, const std::string& what)
    : std::runtime_error(what), step_(step), path_(path) {}

VolatilityValue VolatilityValue::zero(const MaturityGrid& grid, std::size_t d) {
  return VolatilityValue{std::vector<SignedMeasure>(d, SignedMeasure(grid))};
}

double VolatilityValue::norm_sq(double x) const {
  double s = 0.0;
  for (const auto& c : components) {
    const double v = eval_interval(c, 0.0, x);
    s += v * v;
  }
  return s;
}

CoefficientMap CoefficientMap::zero(const MaturityGrid& grid, std::size_t d) {
  return constant(StepCoefficients{SignedMeasure(grid), VolatilityValue::zero(grid, d)});
}

CoefficientMap CoefficientMap::constant(StepCoefficients value) {
  CoefficientMap map;
  map.factors = value.vol.factors();
  map.state_independent = true;
  map.evaluate = [value = std::move(value)](std::span<const SignedMeasure>, std::size_t) {
    return value;
  };
  return map;
}

MildPath::MildPath(TimeGrid grid, std::size_t n_paths, const SignedMeasure& initial)
    : grid_(grid), n_paths_(n_paths), states_(n_paths * (grid.n_steps + 1), initial) {
  if (n_paths == 0) throw std::invalid_argument("a mild path needs at least one sample path");
}

bool all_finite(const SignedMeasure& mu) {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(mu.density().begin(), mu.density().end(), finite) &&
         std::all_of(mu.atom_weights().begin(), mu.atom_weights().end(), finite);
}

void check_alignment(const MaturityGrid& grid, const CoefficientMap& coeffs,
                     const BrownianDriver& driver) {
  const double dt = driver.grid().dt;
  if (std::abs(dt - grid.cell_width()) > 1e-12 * grid.cell_width()) {
    std::ostringstream os;
    os << "time step " << dt << " differs from the maturity cell width " << grid.cell_width();
    throw GridMismatch(os.str());
  }
  if (coeffs.factors != driver.factors()) {
    std::ostringstream os;
    os << "coefficients have " << coeffs.factors << " noise factors, driver has "
       << driver.factors();
    throw GridMismatch(os.str());
  }
}

namespace {

std::vector<StepCoefficients> cache_if_state_independent(const CoefficientMap& coeffs,
                                                        std::size_t n_steps) {
  std::vector<StepCoefficients> cache;
  if (!coeffs.state_independent) return cache;
  cache.reserve(n_steps);
  for (std::size_t j = 0; j < n_steps; ++j) cache.push_back(coeffs.evaluate({}, j));
  return cache;
}

}  // namespace

double advance_shifted(const SignedMeasure& current, const StepCoefficients& c,
                       std::span<const double> dw, double dt, SignedMeasure& next,
                       std::size_t step, std::size_t path) {
  if (c.vol.factors() != dw.size()) {
    throw GridMismatch("volatility value at step " + std::to_string(step) + " has " +
                       std::to_string(c.vol.factors()) + " components, driver has " +
                       std::to_string(dw.size()) + " factors");
  }
  next = current;
  next.axpy(dt, c.drift);
  for (std::size_t k = 0; k < dw.size(); ++k) next.axpy(dw[k], c.vol.components[k]);
  const double exited = next.shift_cells_inplace(1);
  if (!all_finite(next) || !std::isfinite(exited)) {
    std::ostringstream os;
    os << "non-finite state after step " << step << " on path " << path;
    throw NumericalBlowUp(step, path, os.str());
  }
  return exited;
}

PathSolver::PathSolver(const MaturityGrid& grid, const CoefficientMap& coeffs,
                       const BrownianDriver& driver)
    : coeffs_(&coeffs), driver_(&driver) {
  check_alignment(grid, coeffs, driver);
  cache_ = cache_if_state_independent(coeffs, driver.n_steps());
}

StepCoefficients PathSolver::coefficients(std::span<const SignedMeasure> history,
                                          std::size_t step) const {
  if (!cache_.empty()) return cache_[step];
  return coeffs_->evaluate(history, step);
}

void PathSolver::solve(std::size_t path, std::span<SignedMeasure> states,
                       std::span<double> consumed,
                       std::span<const SignedMeasure> coefficient_history, std::size_t from_step,
                       std::size_t to_step) const {
  const std::size_t n = driver_->n_steps();
  if (states.size() != n + 1) throw std::invalid_argument("state buffer must hold n_steps + 1");
  if (!coefficient_history.empty() && coefficient_history.size() < n) {
    throw std::invalid_argument("coefficient history is shorter than the time grid");
  }
  const double dt = driver_->grid().dt;
  const auto history = coefficient_history.empty()
                           ? std::span<const SignedMeasure>(states.data(), states.size())
                           : coefficient_history;
  to_step = std::min(to_step, n);
  for (std::size_t j = from_step; j < to_step; ++j) {
    double exited;
    if (const auto* c = cached(j)) {
      exited = advance_shifted(states[j], *c, driver_->increment(path, j), dt, states[j + 1], j, path);
    } else {
      const StepCoefficients c_j = coeffs_->evaluate(history.first(j + 1), j);
      exited = advance_shifted(states[j], c_j, driver_->increment(path, j), dt, states[j + 1], j, path);
    }
    if (!consumed.empty()) consumed[j] = exited;
  }
}

void euler_mild_path(const CoefficientMap& coeffs, const BrownianDriver& driver, std::size_t path,
                     std::span<SignedMeasure> states, std::span<double> consumed) {
  PathSolver(states.front().grid(), coeffs, driver).solve(path, states, consumed);
}

MildPath euler_mild_solve(const SignedMeasure& x0, const CoefficientMap& coeffs,
                          const BrownianDriver& driver) {
  std::vector<SignedMeasure> initial(driver.n_paths(), x0);
  return euler_mild_solve(initial, coeffs, driver);
}

MildPath euler_mild_solve(std::span<const SignedMeasure> x0, const CoefficientMap& coeffs,
                          const BrownianDriver& driver) {
  if (x0.size() != driver.n_paths()) {
    throw std::invalid_argument("need one initial measure per driver path");
  }
  const PathSolver solver(x0.front().grid(), coeffs, driver);
  MildPath out(driver.grid(), driver.n_paths(), x0.front());
  parallel_for(driver.n_paths(), [&](std::size_t p) {
    if (!(x0[p].grid() == x0.front().grid())) {
      throw GridMismatch("per-path initial measures use different grids");
    }
    auto states = out.path_states(p);
    states[0] = x0[p];
    solver.solve(p, states);
  });
  return out;
}

double path_distance(const MildPath& x, const MildPath& y) {
  if (!(x.grid() == y.grid()) || x.n_paths() != y.n_paths() ||
      !(x.maturity_grid() == y.maturity_grid())) {
    throw std::invalid_argument("path_distance needs identical time grids, maturity grids and path counts");
  }
  const std::size_t steps = x.n_steps() + 1;
  const std::size_t boundaries = x.maturity_grid().n_cells() + 1;
  std::vector<double> per_step(steps, 0.0);
  parallel_for(steps, [&](std::size_t j) {
    std::vector<double> sums(boundaries, 0.0);
    for (std::size_t p = 0; p < x.n_paths(); ++p) {
      const auto cx = cumulative_at_boundaries(x.at(j, p));
      const auto cy = cumulative_at_boundaries(y.at(j, p));
      for (std::size_t b = 0; b < boundaries; ++b) {
        const double d = cx[b] - cy[b];
        sums[b] += d * d;
      }
    }
    const double worst = *std::max_element(sums.begin(), sums.end());
    per_step[j] = std::sqrt(worst / static_cast<double>(x.n_paths()));
  });
  return *std::max_element(per_step.begin(), per_step.end());
}

namespace {

MildPath picard_map_range(const MildPath& x, const CoefficientMap& coeffs,
                          const BrownianDriver& driver, std::size_t from_step,
                          std::size_t to_step) {
  if (!(x.grid() == driver.grid()) || x.n_paths() != driver.n_paths()) {
    throw std::invalid_argument("path and driver shapes differ");
  }
  const PathSolver solver(x.maturity_grid(), coeffs, driver);
  MildPath y = x;
  parallel_for(x.n_paths(), [&](std::size_t p) {
    solver.solve(p, y.path_states(p), {}, x.history(p, x.n_steps()), from_step, to_step);
  });
  return y;
}

struct SegmentRun {
  MildPath path;
  PicardSegment record;
};

SegmentRun run_segment(const MildPath& start, const CoefficientMap& coeffs,
                       const BrownianDriver& driver, std::size_t first, std::size_t last,
                       const PicardOptions& options) {
  MildPath current = start;
  for (std::size_t p = 0; p < current.n_paths(); ++p) {
    for (std::size_t j = first + 1; j <= last; ++j) current.at(j, p) = current.at(first, p);
  }
  PicardSegment record{first, last, 0, false, {}, {}};
  for (std::size_t k = 0; k < options.max_iterations; ++k) {
    MildPath next = picard_map_range(current, coeffs, driver, first, last);
    const double dist = path_distance(next, current);
    record.distances.push_back(dist);
    if (k > 0) {
      const double prev = record.distances[k - 1];
      record.ratios.push_back(prev > 0.0 ? dist / prev : 0.0);
    }
    current = std::move(next);
    if (dist < options.tolerance) {
      record.iterations = k;
      record.converged = true;
      break;
    }
    record.iterations = k + 1;
  }
  return {std::move(current), std::move(record)};
}

bool expanding(const PicardSegment& s) {
  // ratios[0] belongs to iteration 1; contraction is required from iteration 2.
  for (std::size_t i = 1; i < s.ratios.size(); ++i) {
    if (s.ratios[i] >= 1.0) return true;
  }
  return false;
}

void solve_segment(const MildPath& start, const CoefficientMap& coeffs, const BrownianDriver& driver,
                   std::size_t first, std::size_t last, const PicardOptions& options,
                   PicardResult& result, MildPath& out, bool record_whole) {
  SegmentRun run = run_segment(start, coeffs, driver, first, last, options);
  const bool split = options.split_on_expansion && (expanding(run.record) || !run.record.converged) &&
                     last - first >= 2;
  if (record_whole || !split) result.segments.push_back(run.record);
  if (!split) {
    result.iterations += run.record.iterations;
    result.converged = result.converged && run.record.converged;
    out = std::move(run.path);
    return;
  }
  const std::size_t mid = first + (last - first) / 2;
  MildPath left = start;
  solve_segment(start, coeffs, driver, first, mid, options, result, left, false);
  solve_segment(left, coeffs, driver, mid, last, options, result, out, false);
}

}  // namespace

MildPath picard_map(const MildPath& x, const CoefficientMap& coeffs, const BrownianDriver& driver,
                    std::size_t from_step) {
  return picard_map_range(x, coeffs, driver, from_step, driver.n_steps());
}

PicardResult picard_iterate(const SignedMeasure& x0, const CoefficientMap& coeffs,
                            const BrownianDriver& driver, const PicardOptions& options) {
  check_alignment(x0.grid(), coeffs, driver);
  const MildPath start(driver.grid(), driver.n_paths(), x0);
  PicardResult result;
  result.converged = true;
  MildPath out = start;
  solve_segment(start, coeffs, driver, 0, driver.n_steps(), options, result, out, true);
  result.residual = path_distance(picard_map(out, coeffs, driver), out);
  result.path = std::move(out);
  return result;
}

}  // namespace cylhjm

#include "cylhjm/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cylhjm/parallel.hpp"

namespace cylhjm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

TimeGrid::TimeGrid(double dt_, std::size_t n_steps_) : dt(dt_), n_steps(n_steps_) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  if (n_steps == 0) throw std::invalid_argument("time grid needs at least one step");
}

TimeGrid TimeGrid::refined(std::size_t factor) const {
  return TimeGrid(dt / static_cast<double>(factor), n_steps * factor);
}

std::mt19937_64 path_generator(std::uint64_t seed, std::uint64_t path, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(path + 0x632be59bd9b4e019ULL));
  const std::uint64_t c = splitmix64(b ^ splitmix64(stream + 0x8cb92ba72f3d8dd7ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return std::mt19937_64(seq);
}

void sample_path_increments(std::uint64_t seed, std::uint64_t path, std::size_t d,
                            const TimeGrid& grid, std::span<double> out) {
  if (out.size() != grid.n_steps * d) {
    throw std::invalid_argument("increment buffer has the wrong size");
  }
  auto rng = path_generator(seed, path);
  std::normal_distribution<double> normal(0.0, std::sqrt(grid.dt));
  for (double& x : out) x = normal(rng);
}

BrownianDriver::BrownianDriver(TimeGrid grid, std::size_t d, std::size_t n_paths,
                               std::uint64_t seed)
    : grid_(grid), d_(d), n_paths_(n_paths), seed_(seed), inc_(n_paths * grid.n_steps * d, 0.0) {
  if (d == 0 || n_paths == 0) {
    throw std::invalid_argument("driver needs at least one factor and one path");
  }
}

double BrownianDriver::level(std::size_t path, std::size_t step, std::size_t k) const {
  double w = 0.0;
  for (std::size_t j = 0; j < step; ++j) w += increment(path, j)[k];
  return w;
}

BrownianDriver sample_increments(std::size_t d, std::size_t n_steps, double dt,
                                 std::size_t n_paths, std::uint64_t seed) {
  BrownianDriver driver(TimeGrid(dt, n_steps), d, n_paths, seed);
  parallel_for(n_paths, [&](std::size_t p) {
    sample_path_increments(seed, p, d, driver.grid(), driver.path_increments(p));
  });
  return driver;
}

BrownianDriver refine_by_bridge(const BrownianDriver& coarse, std::uint64_t level) {
  const std::size_t d = coarse.factors();
  BrownianDriver fine(coarse.grid().refined(2), d, coarse.n_paths(), coarse.seed());
  const double half = coarse.grid().dt / 2.0;
  parallel_for(coarse.n_paths(), [&](std::size_t p) {
    auto rng = path_generator(coarse.seed(), p, level);
    std::normal_distribution<double> normal(0.0, std::sqrt(half / 2.0));
    for (std::size_t j = 0; j < coarse.n_steps(); ++j) {
      auto dw = coarse.increment(p, j);
      auto left = fine.increment(p, 2 * j);
      auto right = fine.increment(p, 2 * j + 1);
      for (std::size_t k = 0; k < d; ++k) {
        left[k] = 0.5 * dw[k] + normal(rng);
        right[k] = dw[k] - left[k];
      }
    }
  });
  return fine;
}

std::vector<Eigen::VectorXd> ito_step_integral(const StepIntegrand& integrand, std::size_t m,
                                               const BrownianDriver& driver) {
  const std::size_t d = driver.factors();
  std::vector<Eigen::VectorXd> out(driver.n_paths(),
                                   Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m)));
  parallel_for(driver.n_paths(), [&](std::size_t p) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < driver.n_steps(); ++j) {
      const Eigen::MatrixXd a = integrand(j, p);
      if (static_cast<std::size_t>(a.rows()) != m || static_cast<std::size_t>(a.cols()) != d) {
        throw std::invalid_argument("integrand at step " + std::to_string(j) + " is " +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    ", expected " + std::to_string(m) + "x" + std::to_string(d));
      }
      auto dw = driver.increment(p, j);
      acc += a * Eigen::Map<const Eigen::VectorXd>(dw.data(), static_cast<Eigen::Index>(d));
    }
    out[p] = std::move(acc);
  });
  return out;
}

IsometryGap ito_isometry_gap(std::span<const Eigen::MatrixXd> integrand,
                             const BrownianDriver& driver) {
  if (integrand.size() != driver.n_steps()) {
    throw std::invalid_argument("deterministic integrand must have one matrix per step");
  }
  const auto m = static_cast<std::size_t>(integrand.front().rows());
  IsometryGap gap;
  for (const auto& a : integrand) gap.exact_value += a.squaredNorm() * driver.grid().dt;

  const auto values = ito_step_integral(
      [&](std::size_t step, std::size_t) { return integrand[step]; }, m, driver);
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (const auto& v : values) mean += v.squaredNorm();
  mean /= n;
  double var = 0.0;
  for (const auto& v : values) {
    const double e = v.squaredNorm() - mean;
    var += e * e;
  }
  var = values.size() > 1 ? var / (n - 1.0) : 0.0;
  gap.mc_second_moment = mean;
  gap.standard_error = std::sqrt(var / n);
  const double diff = std::abs(gap.mc_second_moment - gap.exact_value);
  if (gap.standard_error > 0.0) {
    gap.gap_in_stderr = diff / gap.standard_error;
  } else {
    gap.gap_in_stderr = diff == 0.0 ? 0.0 : INFINITY;
  }
  gap.pass = gap.gap_in_stderr < 3.0;
  return gap;
}

double dirac_convolution_identity_gap(const std::function<double(double)>& f,
                                      const std::function<double(double)>& f_prime, double t,
                                      const BrownianDriver& driver) {
  if (driver.factors() != 1) {
    throw std::invalid_argument("the convolution identity check needs a one-factor driver");
  }
  const auto& grid = driver.grid();
  const double steps = t / grid.dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, rounded) || rounded < 1.0 ||
      rounded > static_cast<double>(grid.n_steps)) {
    throw std::invalid_argument("t must be a grid time within the driver horizon");
  }
  if (std::abs(f(0.0)) > 1e-12 || std::abs(f(t)) > 1e-12) {
    throw std::invalid_argument("f must vanish at 0 and at t (support strictly inside (0, t))");
  }
  const auto n = static_cast<std::size_t>(rounded);
  std::vector<double> fv(n);
  std::vector<double> dv(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lag = t - grid.time(j);
    fv[j] = f(lag);
    dv[j] = f_prime(lag);
  }
  std::vector<double> per_path(driver.n_paths(), 0.0);
  parallel_for(driver.n_paths(), [&](std::size_t p) {
    double stochastic = 0.0;
    double pathwise = 0.0;
    double w = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dw = driver.increment(p, j)[0];
      stochastic += fv[j] * dw;
      pathwise += dv[j] * w * grid.dt;
      w += dw;
    }
    per_path[p] = std::abs(stochastic - pathwise);
  });
  return *std::max_element(per_path.begin(), per_path.end());
}

}  // namespace cylhjm

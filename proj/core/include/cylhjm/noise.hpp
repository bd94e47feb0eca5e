#pragma once

// Truncated cylindrical Brownian motion on a uniform time grid and Ito
// integration of step integrands against it.
//
// Each path owns an independent generator stream derived from (seed, path), so
// increments do not depend on how paths are split across workers.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace cylhjm {

struct TimeGrid {
  double dt;
  std::size_t n_steps;

  TimeGrid(double dt, std::size_t n_steps);
  double time(std::size_t j) const { return dt * static_cast<double>(j); }
  double horizon() const { return time(n_steps); }
  TimeGrid refined(std::size_t factor) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Generator for the stream of one path; `stream` separates independent uses
/// (for example Brownian-bridge fill-ins) of the same (seed, path).
std::mt19937_64 path_generator(std::uint64_t seed, std::uint64_t path, std::uint64_t stream = 0);

/// Fills `out` (n_steps * d values, step-major) with N(0, dt) increments.
void sample_path_increments(std::uint64_t seed, std::uint64_t path, std::size_t d,
                            const TimeGrid& grid, std::span<double> out);

class BrownianDriver {
 public:
  BrownianDriver(TimeGrid grid, std::size_t d, std::size_t n_paths, std::uint64_t seed);

  const TimeGrid& grid() const { return grid_; }
  std::size_t factors() const { return d_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_steps() const { return grid_.n_steps; }
  std::uint64_t seed() const { return seed_; }

  /// Increment of path `path` over [t_step, t_step+1], d values.
  std::span<const double> increment(std::size_t path, std::size_t step) const {
    return {inc_.data() + (path * grid_.n_steps + step) * d_, d_};
  }
  std::span<double> increment(std::size_t path, std::size_t step) {
    return {inc_.data() + (path * grid_.n_steps + step) * d_, d_};
  }
  std::span<const double> path_increments(std::size_t path) const {
    return {inc_.data() + path * grid_.n_steps * d_, grid_.n_steps * d_};
  }
  std::span<double> path_increments(std::size_t path) {
    return {inc_.data() + path * grid_.n_steps * d_, grid_.n_steps * d_};
  }
  /// W_{t_step} for factor k, summing increments of earlier steps.
  double level(std::size_t path, std::size_t step, std::size_t k) const;

  friend bool operator==(const BrownianDriver&, const BrownianDriver&) = default;

 private:
  TimeGrid grid_;
  std::size_t d_;
  std::size_t n_paths_;
  std::uint64_t seed_;
  std::vector<double> inc_;
};

BrownianDriver sample_increments(std::size_t d, std::size_t n_steps, double dt,
                                 std::size_t n_paths, std::uint64_t seed);

/// Halves every step, splitting each increment by a Brownian bridge: the
/// coarse increments are reproduced exactly by pairwise sums, the fill-ins
/// come from stream `level` of each path.
BrownianDriver refine_by_bridge(const BrownianDriver& coarse, std::uint64_t level = 1);

/// Per (step, path) m x d matrix; must depend on information up to t_step only.
using StepIntegrand = std::function<Eigen::MatrixXd(std::size_t step, std::size_t path)>;

/// Per path, sum_j A_j dW_j in R^m.
std::vector<Eigen::VectorXd> ito_step_integral(const StepIntegrand& integrand, std::size_t m,
                                               const BrownianDriver& driver);

struct IsometryGap {
  double mc_second_moment = 0.0;
  double exact_value = 0.0;
  double standard_error = 0.0;
  /// |mc - exact| / stderr (0 when both vanish).
  double gap_in_stderr = 0.0;
  bool pass = true;
};

/// Deterministic step integrand: one m x d matrix per step.
IsometryGap ito_isometry_gap(std::span<const Eigen::MatrixXd> integrand,
                             const BrownianDriver& driver);

/// max over paths of |sum_j f(t - s_j) dW_j - sum_j f'(t - s_j) W_{s_j} dt| for
/// the grid times s_j < t. Requires f(0) = f(t) = 0 within 1e-12 and d = 1.
double dirac_convolution_identity_gap(const std::function<double(double)>& f,
                                      const std::function<double(double)>& f_prime, double t,
                                      const BrownianDriver& driver);

}  // namespace cylhjm

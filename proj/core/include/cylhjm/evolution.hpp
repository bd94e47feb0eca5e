#pragma once

// Mild solutions of
//
//   X_t = S_t^* X_0 + int_0^t S_{t-s}^* F(X)_s ds + int_0^t S_{t-s}^* G(X)_s dW_s
//
// on a uniform time grid whose step equals the maturity cell width, with S^*
// the adjoint shift on measures. The explicit exponential-Euler recursion
//
//   X[j+1] = S_dt^* ( X[j] + F_j dt + sum_k G_j^(k) dW_j^(k) )
//
// coincides with the discretized mild formula by linearity and the semigroup
// law. Coefficients are evaluated at the left end of each step.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylhjm/measures.hpp"
#include "cylhjm/noise.hpp"

namespace cylhjm {

class NumericalBlowUp : public std::runtime_error {
 public:
  NumericalBlowUp(std::size_t step, std::size_t path, const std::string& what);
  std::size_t step() const { return step_; }
  std::size_t path() const { return path_; }

 private:
  std::size_t step_;
  std::size_t path_;
};

/// Element of L(R^d, M): one measure per noise factor.
struct VolatilityValue {
  std::vector<SignedMeasure> components;

  static VolatilityValue zero(const MaturityGrid& grid, std::size_t d);
  std::size_t factors() const { return components.size(); }
  /// sum_k component_k(0, x]^2
  double norm_sq(double x) const;
};

struct StepCoefficients {
  SignedMeasure drift;
  VolatilityValue vol;
};

/// Coefficient map (F, G). `history` holds the states X[0..step] of one path;
/// the result may depend on nothing else (predictability) and must be a pure
/// function of its arguments.
struct CoefficientMap {
  using Evaluate =
      std::function<StepCoefficients(std::span<const SignedMeasure> history, std::size_t step)>;

  Evaluate evaluate;
  std::size_t factors = 1;
  /// Declared Lipschitz bounds, reported by diagnostics only.
  double lipschitz_drift = 0.0;
  double lipschitz_vol = 0.0;
  /// When set, evaluate ignores `history`, so values are computed once per step.
  bool state_independent = false;

  static CoefficientMap zero(const MaturityGrid& grid, std::size_t d);
  /// Same drift and volatility at every step and on every path.
  static CoefficientMap constant(StepCoefficients value);
};

/// Discretized process X[j][path], j = 0..n_steps, stored path-major.
class MildPath {
 public:
  MildPath(TimeGrid grid, std::size_t n_paths, const SignedMeasure& initial);

  const TimeGrid& grid() const { return grid_; }
  const MaturityGrid& maturity_grid() const { return states_.front().grid(); }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_steps() const { return grid_.n_steps; }

  const SignedMeasure& at(std::size_t step, std::size_t path) const {
    return states_[path * (grid_.n_steps + 1) + step];
  }
  SignedMeasure& at(std::size_t step, std::size_t path) {
    return states_[path * (grid_.n_steps + 1) + step];
  }
  /// X[0..upto][path].
  std::span<const SignedMeasure> history(std::size_t path, std::size_t upto) const {
    return {states_.data() + path * (grid_.n_steps + 1), upto + 1};
  }
  std::span<SignedMeasure> path_states(std::size_t path) {
    return {states_.data() + path * (grid_.n_steps + 1), grid_.n_steps + 1};
  }

 private:
  TimeGrid grid_;
  std::size_t n_paths_;
  std::vector<SignedMeasure> states_;
};

/// Throws GridMismatch unless dt equals the cell width and the factor counts agree.
void check_alignment(const MaturityGrid& grid, const CoefficientMap& coeffs,
                     const BrownianDriver& driver);

/// Steps single paths of the explicit scheme. State-independent coefficients
/// are evaluated once per step at construction.
class PathSolver {
 public:
  PathSolver(const MaturityGrid& grid, const CoefficientMap& coeffs, const BrownianDriver& driver);

  /// `states` holds n_steps + 1 measures and states[0] is the initial value.
  /// Coefficients are evaluated on `coefficient_history` when given (it must
  /// cover n_steps states), otherwise on `states` itself. If `consumed` is
  /// non-empty it receives, per step j, the mass of (0, dt] that left through 0
  /// in the shift from j to j + 1.
  void solve(std::size_t path, std::span<SignedMeasure> states, std::span<double> consumed = {},
             std::span<const SignedMeasure> coefficient_history = {}, std::size_t from_step = 0,
             std::size_t to_step = static_cast<std::size_t>(-1)) const;

  /// Coefficients at `step` for the given history (cached when state independent).
  StepCoefficients coefficients(std::span<const SignedMeasure> history, std::size_t step) const;
  const StepCoefficients* cached(std::size_t step) const {
    return cache_.empty() ? nullptr : &cache_[step];
  }

 private:
  const CoefficientMap* coeffs_;
  const BrownianDriver* driver_;
  std::vector<StepCoefficients> cache_;
};

/// next = S_dt^*(current + drift dt + sum_k vol_k dW_k); returns the mass that
/// left through 0. Throws NumericalBlowUp on non-finite results.
double advance_shifted(const SignedMeasure& current, const StepCoefficients& c,
                       std::span<const double> dw, double dt, SignedMeasure& next,
                       std::size_t step, std::size_t path);

/// Solves one path with coefficients evaluated on the path itself.
void euler_mild_path(const CoefficientMap& coeffs, const BrownianDriver& driver, std::size_t path,
                     std::span<SignedMeasure> states, std::span<double> consumed = {});

MildPath euler_mild_solve(const SignedMeasure& x0, const CoefficientMap& coeffs,
                          const BrownianDriver& driver);
/// Per-path initial values, one per driver path.
MildPath euler_mild_solve(std::span<const SignedMeasure> x0, const CoefficientMap& coeffs,
                          const BrownianDriver& driver);

/// max over x in {cell boundaries} and j of sqrt(mean_paths (X[j](0,x] - Y[j](0,x])^2).
double path_distance(const MildPath& x, const MildPath& y);

/// One application of the fixed-point map: coefficients are evaluated on
/// `x` and the mild formula is recomputed with the driver's noise. Steps up to
/// and including `from_step` are copied from `x`.
MildPath picard_map(const MildPath& x, const CoefficientMap& coeffs, const BrownianDriver& driver,
                    std::size_t from_step = 0);

struct PicardSegment {
  std::size_t first_step;
  std::size_t last_step;
  std::size_t iterations;
  bool converged;
  std::vector<double> distances;
  /// ratios[k - 1] = distances[k] / distances[k - 1].
  std::vector<double> ratios;
};

struct PicardResult {
  std::optional<MildPath> path;
  /// Index k of the first iterate with path_distance(K(X^(k)), X^(k)) < tol,
  /// summed over segments.
  std::size_t iterations = 0;
  bool converged = false;
  /// path_distance(X, K(X)) for the returned X.
  double residual = 0.0;
  /// Whole-horizon run first; further entries appear when the horizon was
  /// split because successive-iterate ratios did not drop below one.
  std::vector<PicardSegment> segments;
  /// Ratios of the unsplit whole-horizon run.
  const std::vector<double>& ratios() const { return segments.front().ratios; }
};

struct PicardOptions {
  std::size_t max_iterations = 20;
  double tolerance = 1e-8;
  /// Restart on halves of the horizon when a ratio from iteration 2 on is >= 1.
  bool split_on_expansion = true;
};

PicardResult picard_iterate(const SignedMeasure& x0, const CoefficientMap& coeffs,
                            const BrownianDriver& driver, const PicardOptions& options = {});

bool all_finite(const SignedMeasure& mu);

}  // namespace cylhjm

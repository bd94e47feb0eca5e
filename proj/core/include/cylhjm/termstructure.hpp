#pragma once

// Heath-Jarrow-Morton models driven by measure-valued forward rates.
//
// The rate component X is parameterized by time to maturity and evolves under
// the adjoint shift; bond prices are P(t, T) = exp(-X_t(0, T - t]). The energy
// component Xe is parameterized by time of maturity, evolves without a
// semigroup and prices advance-settled futures as interval masses
// Xe_t(T1, T2].

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cylhjm/evolution.hpp"
#include "cylhjm/measures.hpp"
#include "cylhjm/noise.hpp"

namespace cylhjm {

/// Bounded Lipschitz scalar map R^n -> R,
///   l(z) = constant + saturation * tanh(<slope, z> / saturation),
/// or l(z) = constant when the slope is zero.
struct Loading {
  double constant = 0.0;
  std::vector<double> slope;
  double saturation = 0.0;

  double operator()(std::span<const double> z) const;
  bool is_constant() const;
  double bound() const;
  double lipschitz() const;
};

/// Contribution loading(z) * base to volatility component `factor`.
struct VolTerm {
  std::size_t factor;
  SignedMeasure base;
  Loading loading;
};

struct ExampleCoefficientSpec {
  MaturityGrid grid;
  std::size_t factors = 1;
  /// State functionals z_i = X_t(e_i).
  std::vector<StepFunction> test_functions;
  std::vector<VolTerm> terms;

  /// Throws std::invalid_argument on inconsistent grids, factor indices,
  /// slope lengths or unbounded loadings.
  void validate() const;
  bool state_independent() const;
};

enum class DriftRule {
  /// F = sum_k G_k * distribution(G_k), so that F(0, x] = (1/2) ||G(0, x]||^2.
  hjm,
  /// F = 0, the advance-settled futures condition.
  zero,
};

/// Volatility g(X_t(e)) for the current state of one path.
VolatilityValue example_volatility(const ExampleCoefficientSpec& spec, const SignedMeasure& state);

/// sum_k mul_distribution(vol_k); mul_distribution already carries the factor 1/2.
SignedMeasure hjm_drift(const VolatilityValue& vol);

CoefficientMap build_example_coefficients(const ExampleCoefficientSpec& spec,
                                          DriftRule rule = DriftRule::hjm);

struct HJMModel {
  SignedMeasure rates_x0;
  CoefficientMap rates;
  SignedMeasure energy_x0;
  /// Evaluated on the history of the rate component.
  CoefficientMap energy;
};

/// Largest |F(0, x] - (1/2) ||G(0, x]||^2| over cell boundaries and atom
/// locations of one coefficient value.
double drift_condition_gap(const StepCoefficients& c);
/// Same, maximized over every path and step 0..n_steps-1 of `x`.
double drift_condition_gap(const CoefficientMap& coeffs, const MildPath& x);

/// Energy forward measures: Xe[j+1] = Xe[j] + Fe_j dt + Ge_j dW_j with
/// coefficients evaluated on the rate path.
MildPath solve_energy(const SignedMeasure& energy_x0, const CoefficientMap& energy,
                      const MildPath& rates, const BrownianDriver& driver);

/// exp(-X[j](0, T - t_j]) per path.
std::vector<double> bond_price(const MildPath& x, std::size_t step, double maturity);

/// Xe[j](T1, T2] per path.
std::vector<double> energy_future(const MildPath& xe, std::size_t step, double t1, double t2);

/// log B_{t_j} = X0(0, t_j] + sum_{i<j} F_i(0, t_j - t_i] dt + G_i(0, t_j - t_i] . dW_i,
/// with coefficients evaluated on `x`.
std::vector<double> log_bank_account_closed(const MildPath& x, const CoefficientMap& coeffs,
                                            const BrownianDriver& driver, std::size_t step);
std::vector<double> bank_account_closed(const MildPath& x, const CoefficientMap& coeffs,
                                        const BrownianDriver& driver, std::size_t step);
/// Solves the rate equation from x0 first.
std::vector<double> bank_account_closed(const SignedMeasure& x0, const CoefficientMap& coeffs,
                                        const BrownianDriver& driver, std::size_t step);

/// log of prod_{i=1}^n P(t_{i-1}, t_i)^{-1} with t_i = t_j i / n; n must divide j.
std::vector<double> log_bank_account_discrete(const MildPath& x, std::size_t step,
                                              std::size_t subdivisions);
std::vector<double> bank_account_discrete(const MildPath& x, std::size_t step,
                                          std::size_t subdivisions);

struct MartingaleCheck {
  double reference = 0.0;
  double mean = 0.0;
  double mean_gap = 0.0;
  double standard_error = 0.0;
  bool pass = true;
};

/// pass = mean_gap < 3 standard errors. With zero sample spread the gap is
/// compared against a 1e-12 relative rounding floor instead.
MartingaleCheck martingale_check(double reference, std::span<const double> samples);

/// One check per checkpoint; samples[c] holds the per-path values at checkpoint c.
std::vector<MartingaleCheck> martingale_test(double reference,
                                             const std::vector<std::vector<double>>& samples);

// ---------------------------------------------------------------------------
// Streaming Monte Carlo: paths are simulated one at a time and only the
// requested observables are kept.

struct FuturesBucket {
  double t1;
  double t2;
};

struct MartingaleExperiment {
  std::vector<double> maturities;
  std::vector<double> checkpoints;
  std::vector<FuturesBucket> buckets;
  /// Added to the rate drift at every step; used for negative controls.
  std::optional<SignedMeasure> drift_perturbation;
};

struct BondCheck {
  double maturity;
  double checkpoint;
  MartingaleCheck check;
};

struct FuturesCheck {
  FuturesBucket bucket;
  double checkpoint;
  /// Undiscounted futures price Xe_t(T1, T2].
  MartingaleCheck price;
  /// Futures price divided by the bank account.
  MartingaleCheck discounted;
};

struct MartingaleReport {
  std::vector<BondCheck> bonds;
  std::vector<FuturesCheck> futures;
  bool all_bonds_pass() const;
};

MartingaleReport run_martingale_experiment(const HJMModel& model, const BrownianDriver& driver,
                                           const MartingaleExperiment& experiment);

}  // namespace cylhjm

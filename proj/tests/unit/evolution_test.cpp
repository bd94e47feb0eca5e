#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cylhjm/evolution.hpp"
#include "oracles.hpp"

namespace cylhjm {
namespace {

using testing::naive_mass;
using testing::near_rel;
using testing::random_measure;

/// Drift and volatility depend on the current state through X(0, 0.5] and
/// X(0, 1]; both are bounded and Lipschitz.
CoefficientMap markovian_coefficients(const MaturityGrid& g, double strength) {
  const auto phi = SignedMeasure::constant_density(g, 0.05, 0.0, 1.0);
  auto beta = SignedMeasure::constant_density(g, 0.1, 0.5, 1.5);
  beta.add_atom(1.0, 0.05);
  CoefficientMap map;
  map.factors = 1;
  map.evaluate = [=](std::span<const SignedMeasure> h, std::size_t) {
    const auto& x = h.back();
    const double z1 = eval_interval(x, 0.0, 0.5);
    const double z2 = eval_interval(x, 0.0, 1.0);
    SignedMeasure drift = phi;
    drift.scale(1.0 + strength * std::tanh(z1));
    SignedMeasure vol = beta;
    vol.scale(1.0 + strength * std::tanh(z2));
    return StepCoefficients{std::move(drift), VolatilityValue{{std::move(vol)}}};
  };
  return map;
}

/// Different deterministic coefficients at every step.
CoefficientMap step_varying_coefficients(const MaturityGrid& g, std::size_t d, std::size_t n_steps,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<StepCoefficients> table;
  for (std::size_t j = 0; j < n_steps; ++j) {
    VolatilityValue vol;
    for (std::size_t k = 0; k < d; ++k) vol.components.push_back(random_measure(g, rng, 3, false));
    table.push_back({random_measure(g, rng, 3, false), std::move(vol)});
  }
  CoefficientMap map;
  map.factors = d;
  map.state_independent = true;
  map.evaluate = [table](std::span<const SignedMeasure>, std::size_t j) { return table[j]; };
  return map;
}

TEST(EulerMild, PureTransportIsExactShift) {
  std::mt19937_64 rng(41);
  const MaturityGrid g(0.25, 24);
  const auto x0 = random_measure(g, rng, 6, false);
  const auto driver = sample_increments(2, 12, 0.25, 3, 1);
  const auto x = euler_mild_solve(x0, CoefficientMap::zero(g, 2), driver);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t j = 0; j <= 12; ++j) EXPECT_EQ(x.at(j, p), shift_adjoint(x0, g.boundary(j)));
  }
}

TEST(EulerMild, ConstantDriftMatchesUnrolledSum) {
  const MaturityGrid g(0.25, 32);
  auto phi = SignedMeasure::constant_density(g, 0.3, 0.5, 2.0);
  phi.add_atom(1.25, 0.2);
  auto x0 = SignedMeasure::constant_density(g, 0.02);
  x0.add_atom(3.0, 0.1);
  const double dt = 0.25;
  const auto coeffs = CoefficientMap::constant({phi, VolatilityValue::zero(g, 1)});
  const auto driver = sample_increments(1, 8, dt, 2, 2);
  const auto x = euler_mild_solve(x0, coeffs, driver);
  for (std::size_t j = 0; j <= 8; ++j) {
    const double tj = dt * static_cast<double>(j);
    for (std::size_t k = 0; k <= 16; ++k) {
      const double len = g.boundary(k);
      double want = naive_mass(x0, tj, tj + len);
      for (std::size_t i = 0; i < j; ++i) {
        const double lag = tj - dt * static_cast<double>(i);
        want += naive_mass(phi, lag, lag + len) * dt;
      }
      EXPECT_TRUE(near_rel(eval_interval(x.at(j, 1), 0.0, len), want, 1e-12)) << j << " " << k;
    }
  }
}

/// X[j](a, b] from the direct discretized mild formula with the coefficients
/// evaluated on `x` itself.
double direct_mild_mass(const MildPath& x, const CoefficientMap& coeffs, const BrownianDriver& driver,
                        std::size_t p, std::size_t j, double a, double b) {
  const double dt = driver.grid().dt;
  const double window = x.maturity_grid().window();
  auto mass = [&](const SignedMeasure& mu, double lag) {
    return naive_mass(mu, std::min(a + lag, window), std::min(b + lag, window));
  };
  const double tj = dt * static_cast<double>(j);
  double s = mass(x.at(0, p), tj);
  for (std::size_t i = 0; i < j; ++i) {
    const auto c = coeffs.evaluate(x.history(p, i), i);
    const double lag = tj - dt * static_cast<double>(i);
    s += mass(c.drift, lag) * dt;
    for (std::size_t k = 0; k < driver.factors(); ++k) {
      s += mass(c.vol.components[k], lag) * driver.increment(p, i)[k];
    }
  }
  return s;
}

TEST(EulerMild, RecursionEqualsDirectMildFormula) {
  std::mt19937_64 rng(42);
  const MaturityGrid g(0.5, 16);
  for (int variant = 0; variant < 2; ++variant) {
    const auto coeffs = variant == 0 ? step_varying_coefficients(g, 2, 4, 43) : markovian_coefficients(g, 0.8);
    const auto driver = sample_increments(coeffs.factors, 4, 0.5, 2, 44);
    const auto x0 = random_measure(g, rng, 4, false);
    const auto x = euler_mild_solve(x0, coeffs, driver);
    for (std::size_t p = 0; p < 2; ++p) {
      for (std::size_t j = 0; j <= 4; ++j) {
        for (std::size_t a = 0; a <= g.n_cells(); ++a) {
          for (std::size_t b = a; b <= g.n_cells(); b += 3) {
            const double want = direct_mild_mass(x, coeffs, driver, p, j, g.boundary(a), g.boundary(b));
            EXPECT_NEAR(eval_interval(x.at(j, p), g.boundary(a), g.boundary(b)), want, 1e-10);
          }
        }
      }
    }
  }
}

TEST(EulerMild, ScalesLinearlyForStateIndependentCoefficients) {
  std::mt19937_64 rng(45);
  const MaturityGrid g(0.25, 16);
  const auto base = step_varying_coefficients(g, 1, 6, 46);
  const double alpha = 4.0;
  CoefficientMap scaled = base;
  scaled.evaluate = [&base, alpha](std::span<const SignedMeasure> h, std::size_t j) {
    auto c = base.evaluate(h, j);
    c.drift.scale(alpha);
    for (auto& v : c.vol.components) v.scale(alpha);
    return c;
  };
  const auto x0 = random_measure(g, rng, 3, false);
  SignedMeasure ax0 = x0;
  ax0.scale(alpha);
  const auto driver = sample_increments(1, 6, 0.25, 3, 47);
  const auto x = euler_mild_solve(x0, base, driver);
  const auto y = euler_mild_solve(ax0, scaled, driver);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t j = 0; j <= 6; ++j) {
      SignedMeasure want = x.at(j, p);
      want.scale(alpha);
      // Power-of-two scaling is exact in floating point.
      EXPECT_EQ(y.at(j, p), want);
    }
  }
}

TEST(EulerMild, MisalignedGridsThrow) {
  const MaturityGrid g(0.25, 16);
  EXPECT_THROW(euler_mild_solve(SignedMeasure(g), CoefficientMap::zero(g, 1), sample_increments(1, 4, 0.2, 1, 1)),
               GridMismatch);
  EXPECT_THROW(euler_mild_solve(SignedMeasure(g), CoefficientMap::zero(g, 2), sample_increments(1, 4, 0.25, 1, 1)),
               GridMismatch);
}

TEST(EulerMild, BlowUpReportsStepAndPath) {
  const MaturityGrid g(0.25, 8);
  CoefficientMap bad = CoefficientMap::zero(g, 1);
  bad.state_independent = false;
  bad.evaluate = [g](std::span<const SignedMeasure>, std::size_t j) {
    SignedMeasure drift(g);
    if (j == 3) drift.set_density(2, std::numeric_limits<double>::infinity());
    return StepCoefficients{drift, VolatilityValue::zero(g, 1)};
  };
  try {
    euler_mild_solve(SignedMeasure(g), bad, sample_increments(1, 6, 0.25, 2, 1));
    FAIL() << "expected NumericalBlowUp";
  } catch (const NumericalBlowUp& e) {
    EXPECT_EQ(e.step(), 3U);
    EXPECT_EQ(e.path(), 0U);
  }
}

TEST(EulerMild, ExitedMassFeedsConsumedBuffer) {
  std::mt19937_64 rng(48);
  const MaturityGrid g(0.25, 16);
  const auto coeffs = markovian_coefficients(g, 0.5);
  const auto driver = sample_increments(1, 8, 0.25, 1, 49);
  std::vector<SignedMeasure> states(9, random_measure(g, rng, 3, false));
  std::vector<double> consumed(8);
  euler_mild_path(coeffs, driver, 0, states, consumed);
  for (std::size_t j = 0; j < 8; ++j) {
    const auto c = coeffs.evaluate(std::span<const SignedMeasure>(states).first(j + 1), j);
    SignedMeasure pre = states[j];
    pre.axpy(0.25, c.drift).axpy(driver.increment(0, j)[0], c.vol.components[0]);
    EXPECT_NEAR(consumed[j], naive_mass(pre, 0.0, 0.25), 1e-14);
  }
}

TEST(PathDistance, IdentityOffsetAndMetricAxioms) {
  std::mt19937_64 rng(50);
  const MaturityGrid g(0.25, 16);
  const auto driver = sample_increments(1, 6, 0.25, 5, 51);
  const auto coeffs = markovian_coefficients(g, 1.0);
  const auto x = euler_mild_solve(random_measure(g, rng, 3, false), coeffs, driver);
  EXPECT_EQ(path_distance(x, x), 0.0);

  MildPath y = x;
  for (std::size_t p = 0; p < 5; ++p) {
    for (std::size_t j = 0; j <= 6; ++j) y.at(j, p).add_atom(1.5, -0.7);
  }
  EXPECT_NEAR(path_distance(x, y), 0.7, 1e-12);

  for (int trial = 0; trial < 10; ++trial) {
    const auto a = euler_mild_solve(random_measure(g, rng, 3, false), coeffs, driver);
    const auto b = euler_mild_solve(random_measure(g, rng, 3, false), coeffs, driver);
    const auto c = euler_mild_solve(random_measure(g, rng, 3, false), coeffs, driver);
    EXPECT_EQ(path_distance(a, b), path_distance(b, a));
    EXPECT_LE(path_distance(a, c), path_distance(a, b) + path_distance(b, c) + 1e-12);
  }

  const MildPath other(TimeGrid(0.25, 5), 5, SignedMeasure(g));
  EXPECT_THROW(path_distance(x, other), std::invalid_argument);
}

TEST(Picard, StateIndependentCoefficientsConvergeInOneStep) {
  std::mt19937_64 rng(52);
  const MaturityGrid g(0.25, 16);
  const auto coeffs = step_varying_coefficients(g, 2, 8, 53);
  const auto driver = sample_increments(2, 8, 0.25, 4, 54);
  const auto x0 = random_measure(g, rng, 3, false);
  const auto result = picard_iterate(x0, coeffs, driver);
  EXPECT_TRUE(result.converged);
  EXPECT_EQ(result.iterations, 1U);
  ASSERT_EQ(result.segments.size(), 1U);
  ASSERT_GE(result.segments.front().distances.size(), 2U);
  EXPECT_EQ(result.segments.front().distances[1], 0.0);
  EXPECT_EQ(result.residual, 0.0);
  EXPECT_EQ(path_distance(*result.path, euler_mild_solve(x0, coeffs, driver)), 0.0);
}

TEST(Picard, ContractsForLipschitzStateDependentCoefficients) {
  std::mt19937_64 rng(55);
  const MaturityGrid g(1.0 / 64.0, 128);
  const auto coeffs = markovian_coefficients(g, 2.0);
  const auto driver = sample_increments(1, 16, 1.0 / 64.0, 64, 56);
  const auto x0 = SignedMeasure::constant_density(g, 0.03);
  PicardOptions options;
  options.split_on_expansion = false;
  const auto result = picard_iterate(x0, coeffs, driver, options);
  EXPECT_TRUE(result.converged);
  EXPECT_LT(result.residual, 1e-8);
  const auto& ratios = result.ratios();
  for (std::size_t i = 1; i < ratios.size(); ++i) EXPECT_LT(ratios[i], 1.0) << i;
}

TEST(Picard, FixedPointAgreesWithEulerRecursion) {
  const MaturityGrid g(1.0 / 32.0, 64);
  const auto coeffs = markovian_coefficients(g, 1.5);
  const auto driver = sample_increments(1, 16, 1.0 / 32.0, 16, 57);
  const auto x0 = SignedMeasure::constant_density(g, 0.02);
  const auto result = picard_iterate(x0, coeffs, driver);
  ASSERT_TRUE(result.converged);
  EXPECT_LT(path_distance(*result.path, euler_mild_solve(x0, coeffs, driver)), 1e-8);
}

TEST(Picard, SplitsHorizonWhenIterationsExpand) {
  const MaturityGrid g(0.25, 32);
  // A strongly state-dependent map that makes whole-horizon iterates expand early on.
  CoefficientMap map;
  map.factors = 1;
  map.evaluate = [g](std::span<const SignedMeasure> h, std::size_t) {
    const double z = eval_interval(h.back(), 0.0, 4.0);
    auto drift = SignedMeasure::constant_density(g, 4.0 * std::sin(3.0 * z), 0.0, 4.0);
    return StepCoefficients{drift, VolatilityValue::zero(g, 1)};
  };
  const auto driver = sample_increments(1, 16, 0.25, 2, 58);
  PicardOptions options;
  options.max_iterations = 40;
  const auto result = picard_iterate(SignedMeasure::constant_density(g, 0.1), map, driver, options);
  EXPECT_TRUE(result.converged);
  EXPECT_GT(result.segments.size(), 1U);
  EXPECT_LT(result.residual, 1e-8);
  EXPECT_LT(path_distance(*result.path, euler_mild_solve(SignedMeasure::constant_density(g, 0.1), map, driver)),
            1e-8);
}

TEST(Picard, NonFiniteCoefficientsRaise) {
  const MaturityGrid g(0.25, 8);
  CoefficientMap bad;
  bad.factors = 1;
  bad.evaluate = [g](std::span<const SignedMeasure>, std::size_t j) {
    SignedMeasure drift(g);
    if (j == 2) drift.add_atom(1.0, std::numeric_limits<double>::quiet_NaN());
    return StepCoefficients{drift, VolatilityValue::zero(g, 1)};
  };
  EXPECT_THROW(picard_iterate(SignedMeasure(g), bad, sample_increments(1, 4, 0.25, 1, 1)), NumericalBlowUp);
}

}  // namespace
}  // namespace cylhjm

namespace cylhjm {
namespace {

/// Coarse-to-fine self-convergence under Brownian-bridge refinement: distance
/// between consecutive levels at coarse times, on coarse-grid functionals.
std::vector<double> refinement_errors(double strength, std::uint64_t seed, std::size_t levels) {
  MaturityGrid g(1.0 / 8.0, 32);
  SignedMeasure x0 = SignedMeasure::constant_density(g, 0.03);
  BrownianDriver driver = sample_increments(1, 8, 1.0 / 8.0, 100, seed);
  const MaturityGrid coarse = g;
  std::vector<MildPath> solutions;
  for (std::size_t level = 0; level <= levels; ++level) {
    solutions.push_back(euler_mild_solve(x0, markovian_coefficients(g, strength), driver));
    if (level == levels) break;
    driver = refine_by_bridge(driver, level + 1);
    g = g.refined(2);
    x0 = refine(x0, 2);
  }
  std::vector<double> errors;
  for (std::size_t l = 0; l < levels; ++l) {
    const auto& a = solutions[l];
    const auto& b = solutions[l + 1];
    double worst = 0.0;
    for (std::size_t j = 0; j <= 8; ++j) {
      const std::size_t ja = j << l, jb = j << (l + 1);
      for (std::size_t k = 0; k <= coarse.n_cells(); ++k) {
        double s = 0.0;
        for (std::size_t p = 0; p < a.n_paths(); ++p) {
          const double d = eval_interval(a.at(ja, p), 0.0, coarse.boundary(k)) -
                           eval_interval(b.at(jb, p), 0.0, coarse.boundary(k));
          s += d * d;
        }
        worst = std::max(worst, std::sqrt(s / static_cast<double>(a.n_paths())));
      }
    }
    errors.push_back(worst);
  }
  return errors;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return 0.5 * (xs[(xs.size() - 1) / 2] + xs[xs.size() / 2]);
}

TEST(EulerMild, RefinementErrorDecaysLinearlyInDt) {
  for (double strength : {0.0, 0.3}) {
    std::vector<double> ratios;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto e = refinement_errors(strength, 1000 + seed, 3);
      ratios.push_back(e[1] / e[0]);
      ratios.push_back(e[2] / e[1]);
    }
    const double m = median(ratios);
    EXPECT_GE(m, 0.3) << strength;
    EXPECT_LE(m, 0.7) << strength;
  }
}

}  // namespace
}  // namespace cylhjm

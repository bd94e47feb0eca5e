#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cylhjm/measures.hpp"
#include "oracles.hpp"

namespace cylhjm {
namespace {

using testing::naive_mass;
using testing::near_rel;
using testing::random_measure;

TEST(MaturityGrid, RejectsDegenerateShapes) {
  EXPECT_THROW(MaturityGrid(0.0, 4), std::invalid_argument);
  EXPECT_THROW(MaturityGrid(-1.0, 4), std::invalid_argument);
  EXPECT_THROW(MaturityGrid(0.1, 0), std::invalid_argument);
}

TEST(MaturityGrid, SnapsDecimalBoundaries) {
  const MaturityGrid g(0.1, 30);
  EXPECT_TRUE(g.is_aligned(0.3));
  EXPECT_EQ(g.cells_in(0.3), 3U);
  EXPECT_FALSE(g.is_aligned(0.35));
  EXPECT_THROW(g.cells_in(0.35), MisalignedShift);
}

TEST(EvalInterval, AtomAtRightEndpointIsIncluded) {
  const MaturityGrid g(0.25, 8);
  const auto mu = SignedMeasure::dirac(g, 1.0, 1.0);
  EXPECT_EQ(eval_interval(mu, 0.0, 1.0), 1.0);
  EXPECT_EQ(eval_interval(mu, 0.0, 0.5), 0.0);
  EXPECT_EQ(eval_interval(mu, 1.0, 2.0), 0.0);
}

TEST(EvalInterval, ConstantDensityTimesLength) {
  const MaturityGrid g(0.25, 40);
  const auto mu = SignedMeasure::constant_density(g, 0.02);
  EXPECT_NEAR(eval_interval(mu, 0.0, 3.0), 0.06, 1e-15);
}

TEST(EvalInterval, AtomPlusDensity) {
  const MaturityGrid g(0.25, 8);
  auto mu = SignedMeasure::constant_density(g, 1.0);
  mu.add_atom(1.0, 2.0);
  EXPECT_NEAR(eval_interval(mu, 0.5, 1.5), 3.0, 1e-14);
}

TEST(EvalInterval, PartialCellsAndTruncation) {
  const MaturityGrid g(1.0, 2);
  auto mu = SignedMeasure::constant_density(g, 2.0);
  EXPECT_NEAR(eval_interval(mu, 0.25, 0.75), 1.0, 1e-15);
  EXPECT_NEAR(eval_interval(mu, 0.0, 10.0), 4.0, 1e-15);
  EXPECT_THROW(eval_interval(mu, -0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(eval_interval(mu, 1.0, 0.5), std::invalid_argument);
}

TEST(EvalInterval, AgreesWithBruteForceOnRandomIntervals) {
  std::mt19937_64 rng(11);
  const MaturityGrid g(0.2, 15);
  std::uniform_real_distribution<double> u(0.0, 3.2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mu = random_measure(g, rng, 5, trial % 2 == 0);
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    EXPECT_TRUE(near_rel(eval_interval(mu, a, b), naive_mass(mu, a, b), 1e-12));
  }
}

TEST(LinearCombine, SelfDifferenceIsZero) {
  std::mt19937_64 rng(3);
  const MaturityGrid g(0.5, 6);
  const auto mu = random_measure(g, rng);
  const auto z = linear_combine(1.0, mu, -1.0, mu);
  EXPECT_TRUE(z.is_zero());
  EXPECT_EQ(z.atom_count(), 0U);
}

TEST(LinearCombine, ScalesAtoms) {
  const MaturityGrid g(0.5, 6);
  const auto mu = SignedMeasure::dirac(g, 1.0, 1.0);
  std::mt19937_64 rng(4);
  const auto nu = random_measure(g, rng);
  const auto out = linear_combine(2.0, mu, 0.0, nu);
  ASSERT_EQ(out.atom_count(), 1U);
  EXPECT_EQ(out.atom(0).location, 1.0);
  EXPECT_EQ(out.atom(0).weight, 2.0);
}

TEST(LinearCombine, CancellingAtomsAreDropped) {
  const MaturityGrid g(0.5, 6);
  const auto out = linear_combine(1.0, SignedMeasure::dirac(g, 1.0, 1.0), 1.0,
                                  SignedMeasure::dirac(g, 1.0, -1.0));
  EXPECT_TRUE(out.is_zero());
  EXPECT_EQ(out.atom_count(), 0U);
}

TEST(LinearCombine, IntervalMassesCombineLinearly) {
  std::mt19937_64 rng(5);
  const MaturityGrid g(0.25, 12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mu = random_measure(g, rng, 4, false);
    const auto nu = random_measure(g, rng, 4, false);
    const auto out = linear_combine(0.7, mu, -1.3, nu);
    for (std::size_t a = 0; a <= g.n_cells(); ++a) {
      for (std::size_t b = a; b <= g.n_cells(); ++b) {
        const double x = g.boundary(a), y = g.boundary(b);
        EXPECT_TRUE(near_rel(eval_interval(out, x, y),
                             0.7 * naive_mass(mu, x, y) - 1.3 * naive_mass(nu, x, y), 1e-12));
      }
    }
  }
}

TEST(LinearCombine, GridMismatchThrows) {
  const MaturityGrid g1(0.5, 6), g2(0.25, 12);
  EXPECT_THROW(linear_combine(1.0, SignedMeasure(g1), 1.0, SignedMeasure(g2)), GridMismatch);
}

TEST(ShiftAdjoint, AtomMovesTowardZero) {
  const MaturityGrid g(0.2, 10);
  const auto mu = SignedMeasure::dirac(g, 1.0, 1.0);
  const auto s = shift_adjoint(mu, 0.4);
  EXPECT_EQ(eval_interval(s, 0.0, 0.6), 1.0);
  EXPECT_EQ(eval_interval(s, 0.0, 0.4), 0.0);
}

TEST(ShiftAdjoint, ZeroShiftIsIdentity) {
  std::mt19937_64 rng(6);
  const MaturityGrid g(0.2, 10);
  const auto mu = random_measure(g, rng, 4, false);
  EXPECT_EQ(shift_adjoint(mu, 0.0), mu);
}

TEST(ShiftAdjoint, MatchesShiftedIntervalsAndDropsExitedMass) {
  std::mt19937_64 rng(7);
  const MaturityGrid g(0.25, 16);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mu = random_measure(g, rng, 5, trial % 2 == 1);
    const std::size_t cells = static_cast<std::size_t>(trial % 7);
    const double t = g.boundary(cells);
    const auto s = shift_adjoint(mu, t);
    for (std::size_t a = 0; a <= g.n_cells(); ++a) {
      for (std::size_t b = a; b <= g.n_cells(); ++b) {
        const double x = g.boundary(a), y = g.boundary(b);
        // Beyond the window the shifted measure is zero-filled.
        const double want = naive_mass(mu, std::min(x + t, g.window()), std::min(y + t, g.window()));
        EXPECT_TRUE(near_rel(eval_interval(s, x, y), want, 1e-12));
      }
    }
    SignedMeasure inplace = mu;
    const double exited = inplace.shift_cells_inplace(cells);
    EXPECT_EQ(inplace, s);
    EXPECT_TRUE(near_rel(exited, naive_mass(mu, 0.0, t), 1e-12));
  }
}

TEST(ShiftAdjoint, SemigroupLawHoldsExactly) {
  std::mt19937_64 rng(8);
  const MaturityGrid g(0.125, 24);
  for (int trial = 0; trial < 40; ++trial) {
    const auto mu = random_measure(g, rng, 6, trial % 2 == 0);
    const double s = g.boundary(static_cast<std::size_t>(trial % 5));
    const double t = g.boundary(static_cast<std::size_t>((trial * 3) % 7));
    const auto two = shift_adjoint(shift_adjoint(mu, s), t);
    const auto one = shift_adjoint(mu, s + t);
    for (std::size_t a = 0; a <= g.n_cells(); ++a) {
      for (std::size_t b = a; b <= g.n_cells(); ++b) {
        EXPECT_EQ(eval_interval(two, g.boundary(a), g.boundary(b)),
                  eval_interval(one, g.boundary(a), g.boundary(b)));
      }
    }
  }
}

TEST(ShiftAdjoint, MisalignedShiftThrows) {
  const MaturityGrid g(0.2, 10);
  EXPECT_THROW(shift_adjoint(SignedMeasure(g), 0.3), MisalignedShift);
  EXPECT_THROW(shift_adjoint(SignedMeasure(g), -0.2), MisalignedShift);
}

TEST(TotalVariation, Examples) {
  const MaturityGrid g(1.0, 2);
  EXPECT_EQ(total_variation(SignedMeasure::dirac(g, 1.0, -2.0)), 2.0);

  SignedMeasure split(g);
  split.set_density(0, 1.0);
  split.set_density(1, -1.0);
  EXPECT_EQ(total_variation(split), 2.0);

  auto mixed = SignedMeasure::constant_density(g, -0.5);
  mixed.add_atom(1.0, 1.0);
  EXPECT_DOUBLE_EQ(total_variation(mixed), 2.0);
}

TEST(TotalVariation, DominatesEveryIntervalMass) {
  std::mt19937_64 rng(9);
  const MaturityGrid g(0.5, 10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mu = random_measure(g, rng, 5, false);
    EXPECT_GE(total_variation(mu) + 1e-14, std::abs(eval_interval(mu, 0.0, g.window())));
  }
}

TEST(DistributionMid, Examples) {
  const MaturityGrid g(0.5, 20);
  const auto atom = SignedMeasure::dirac(g, 1.0, 1.0);
  EXPECT_EQ(distribution_mid(atom, 1.0), 0.5);
  EXPECT_EQ(distribution_mid(atom, 1.5), 1.0);
  EXPECT_NEAR(distribution_mid(SignedMeasure::constant_density(g, 2.0), 0.5), 1.0, 1e-15);
}

TEST(MulDistribution, TwoAtoms) {
  const MaturityGrid g(0.5, 8);
  auto mu = SignedMeasure::dirac(g, 1.0, 1.0);
  mu.add_atom(2.0, 1.0);
  const auto nu = mul_distribution(mu);
  EXPECT_DOUBLE_EQ(eval_interval(nu, 0.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(eval_interval(nu, 1.0, 2.0), 1.5);
  EXPECT_DOUBLE_EQ(eval_interval(nu, 0.0, 2.0), 2.0);
}

TEST(MulDistribution, ConstantDensityGivesQuadratic) {
  const double sigma = 0.3;
  const MaturityGrid g(0.125, 32);
  const auto nu = mul_distribution(SignedMeasure::constant_density(g, sigma));
  for (std::size_t k = 0; k <= g.n_cells(); ++k) {
    const double x = g.boundary(k);
    EXPECT_NEAR(eval_interval(nu, 0.0, x), 0.5 * sigma * sigma * x * x, 1e-15);
  }
}

TEST(MulDistribution, ZeroMapsToZero) {
  const MaturityGrid g(0.5, 4);
  EXPECT_TRUE(mul_distribution(SignedMeasure(g)).is_zero());
}

TEST(MulDistribution, TelescopingOnRandomMeasures) {
  std::mt19937_64 rng(10);
  const MaturityGrid g(0.25, 20);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mu = random_measure(g, rng, 6, true);
    const auto nu = mul_distribution(mu);
    std::vector<double> points;
    for (std::size_t k = 0; k <= g.n_cells(); ++k) points.push_back(g.boundary(k));
    for (const Atom& a : mu.atoms()) points.push_back(a.location);
    for (double x : points) {
      const double m = naive_mass(mu, 0.0, x);
      EXPECT_TRUE(near_rel(naive_mass(nu, 0.0, x), 0.5 * m * m, 1e-10)) << "x=" << x;
    }
  }
}

TEST(MulDistribution, OffGridAtomInDensityFreeCellIsExact) {
  const MaturityGrid g(0.5, 8);
  SignedMeasure mu(g);
  mu.set_density(0, 0.7);
  mu.set_density(1, -0.2);
  mu.add_atom(1.3, 0.4);  // cell (1.0, 1.5] carries no density
  mu.set_density(4, 0.9);
  const auto nu = mul_distribution(mu);
  for (double x : {0.5, 1.0, 1.3, 1.5, 2.5, 4.0}) {
    const double m = naive_mass(mu, 0.0, x);
    EXPECT_TRUE(near_rel(eval_interval(nu, 0.0, x), 0.5 * m * m, 1e-12)) << x;
  }
}

TEST(PairWithFunction, Examples) {
  std::mt19937_64 rng(12);
  const MaturityGrid g(0.25, 12);
  const auto mu = random_measure(g, rng, 4, false);
  EXPECT_TRUE(near_rel(pair_with_function(mu, StepFunction::constant(g, 1.0)),
                       eval_interval(mu, 0.0, g.window()), 1e-12));
  EXPECT_TRUE(near_rel(pair_with_function(mu, StepFunction::indicator(g, 0.5, 1.75)),
                       eval_interval(mu, 0.5, 1.75), 1e-12));

  StepFunction x_fn;
  x_fn.rule = StepFunction::PointRule::explicit_only;
  for (std::size_t k = 0; k < g.n_cells(); ++k) x_fn.cell_values.push_back(g.boundary(k) + 0.125);
  x_fn.set_point(g, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(pair_with_function(SignedMeasure::dirac(g, 1.0, 2.0), x_fn), 2.0);
}

TEST(PairWithFunction, MissingPointValueThrows) {
  const MaturityGrid g(0.25, 12);
  StepFunction f = StepFunction::constant(g, 1.0);
  f.rule = StepFunction::PointRule::explicit_only;
  EXPECT_THROW(pair_with_function(SignedMeasure::dirac(g, 1.0, 2.0), f), std::invalid_argument);
}

TEST(PairWithFunction, DualityBound) {
  std::mt19937_64 rng(13);
  const MaturityGrid g(0.25, 12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mu = random_measure(g, rng, 5, false);
    StepFunction f;
    for (std::size_t k = 0; k < g.n_cells(); ++k) f.cell_values.push_back(u(rng));
    for (const Atom& a : mu.atoms()) f.set_point(g, a.location, u(rng));
    EXPECT_LE(std::abs(pair_with_function(mu, f)), f.sup_norm() * total_variation(mu) + 1e-12);
  }
}

TEST(Additivity, CellAlignedPartitionsSumToWhole) {
  std::mt19937_64 rng(14);
  const MaturityGrid g(0.1, 50);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mu = random_measure(g, rng, 8, trial % 2 == 0);
    std::vector<std::size_t> cuts{0, g.n_cells()};
    std::uniform_int_distribution<std::size_t> cut(1, g.n_cells() - 1);
    for (int i = 0; i < 6; ++i) cuts.push_back(cut(rng));
    std::sort(cuts.begin(), cuts.end());
    double parts = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      parts += eval_interval(mu, g.boundary(cuts[i]), g.boundary(cuts[i + 1]));
    }
    EXPECT_TRUE(near_rel(parts, eval_interval(mu, 0.0, g.window()), 1e-12));
  }
}

TEST(Additivity, ShrinkingLeftEndpointBecomesExactBelowSmallestAtom) {
  const MaturityGrid g(1.0 / 64.0, 128);
  auto mu = SignedMeasure::constant_density(g, 0.5);
  mu.add_atom(0.5, 1.0);
  mu.add_atom(1.25, -0.3);
  const double full = eval_interval(mu, 0.0, 1.5);
  double previous_error = std::abs(eval_interval(mu, 1.0, 1.5) - full);
  for (std::size_t cells = 64; cells >= 32; cells /= 2) {
    const double err = std::abs(eval_interval(mu, g.boundary(cells), 1.5) - full);
    EXPECT_LE(err, previous_error + 1e-15);
    previous_error = err;
  }
  for (std::size_t cells = 16; cells >= 1; cells /= 2) {
    const double eps = g.boundary(cells);
    const double err = std::abs(eval_interval(mu, eps, 1.5) - full);
    EXPECT_LE(err, previous_error + 1e-15);
    // Below the smallest atom only the density part of (0, eps] is missing.
    EXPECT_NEAR(err, 0.5 * eps, 1e-14);
    previous_error = err;
  }
}

TEST(Refine, PreservesIntervalMasses) {
  std::mt19937_64 rng(15);
  const MaturityGrid g(0.5, 6);
  const auto mu = random_measure(g, rng, 4, false);
  const auto fine = refine(mu, 4);
  EXPECT_EQ(fine.grid(), g.refined(4));
  for (std::size_t k = 0; k <= g.n_cells(); ++k) {
    EXPECT_TRUE(near_rel(eval_interval(fine, 0.0, g.boundary(k)), eval_interval(mu, 0.0, g.boundary(k)),
                         1e-12));
  }
}

}  // namespace
}  // namespace cylhjm

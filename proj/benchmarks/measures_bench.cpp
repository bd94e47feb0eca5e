#include <benchmark/benchmark.h>

#include <random>

#include "cylhjm/integration.hpp"
#include "cylhjm/measures.hpp"

namespace {

using namespace cylhjm;

SignedMeasure sample_measure(std::size_t cells, std::size_t atoms, std::uint64_t seed) {
  const MaturityGrid g(1.0 / 64.0, cells);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> cell(1, cells);
  SignedMeasure mu(g);
  for (std::size_t k = 0; k < cells; ++k) mu.set_density(k, u(rng));
  for (std::size_t i = 0; i < atoms; ++i) mu.add_atom(g.boundary(cell(rng)), u(rng));
  return mu;
}

void BM_EvalInterval(benchmark::State& state) {
  const auto mu = sample_measure(static_cast<std::size_t>(state.range(0)), 8, 1);
  const double w = mu.grid().window();
  double a = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_interval(mu, 0.25 * w, 0.75 * w + a));
    a = a > 0.0 ? 0.0 : 1e-3;
  }
}
BENCHMARK(BM_EvalInterval)->Arg(128)->Arg(1024)->Arg(8192);

void BM_ShiftAdjoint(benchmark::State& state) {
  const auto mu = sample_measure(static_cast<std::size_t>(state.range(0)), 8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(shift_adjoint(mu, 1.0 / 64.0));
}
BENCHMARK(BM_ShiftAdjoint)->Arg(128)->Arg(1024)->Arg(8192);

void BM_Axpy(benchmark::State& state) {
  auto mu = sample_measure(static_cast<std::size_t>(state.range(0)), 8, 3);
  const auto nu = sample_measure(static_cast<std::size_t>(state.range(0)), 8, 4);
  for (auto _ : state) {
    mu.axpy(1e-3, nu);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Axpy)->Arg(128)->Arg(1024)->Arg(8192);

void BM_MulDistribution(benchmark::State& state) {
  const auto mu = sample_measure(static_cast<std::size_t>(state.range(0)), 8, 5);
  for (auto _ : state) benchmark::DoNotOptimize(mul_distribution(mu));
}
BENCHMARK(BM_MulDistribution)->Arg(128)->Arg(1024)->Arg(8192);

void BM_ExactSemivariation(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  FiniteVectorMeasure mu{FiniteSpace(n), {}};
  for (std::size_t k = 0; k < n; ++k) mu.values.push_back(Eigen::VectorXd::NullaryExpr(3, [&] { return normal(rng); }));
  const auto p = BilinearPairing::scalar_action(3);
  for (auto _ : state) benchmark::DoNotOptimize(semivariation(mu, p, SemivariationMode::exact_scalar));
}
BENCHMARK(BM_ExactSemivariation)->Arg(8)->Arg(12)->Arg(16);

}  // namespace

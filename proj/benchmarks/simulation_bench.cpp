#include <benchmark/benchmark.h>

#include "cylhjm/evolution.hpp"
#include "cylhjm/termstructure.hpp"

namespace {

using namespace cylhjm;

ExampleCoefficientSpec spec(const MaturityGrid& g, bool state_dependent) {
  ExampleCoefficientSpec s{g, 2, {StepFunction::indicator(g, 0.0, 1.0)}, {}};
  auto atomic = SignedMeasure::dirac(g, 0.5, 0.01);
  s.terms.push_back({0, SignedMeasure::constant_density(g, 0.01), Loading{1.0, {}, 0.0}});
  s.terms.push_back({1, atomic, state_dependent ? Loading{1.0, {3.0}, 0.5} : Loading{1.0, {}, 0.0}});
  return s;
}

void BM_AdvanceOneStep(benchmark::State& state) {
  const MaturityGrid g(1.0 / 64.0, static_cast<std::size_t>(state.range(0)));
  const auto vol = example_volatility(spec(g, false), SignedMeasure(g));
  const StepCoefficients c{hjm_drift(vol), vol};
  const SignedMeasure x = SignedMeasure::constant_density(g, 0.03);
  SignedMeasure next(g);
  const double dw[2] = {0.1, -0.05};
  for (auto _ : state) benchmark::DoNotOptimize(advance_shifted(x, c, dw, 1.0 / 64.0, next, 0, 0));
}
BENCHMARK(BM_AdvanceOneStep)->Arg(128)->Arg(1024);

void BM_SolvePath(benchmark::State& state) {
  const MaturityGrid g(1.0 / 64.0, 128);
  const bool state_dependent = state.range(0) != 0;
  const auto coeffs = build_example_coefficients(spec(g, state_dependent));
  const auto driver = sample_increments(2, 64, 1.0 / 64.0, 1, 1);
  const PathSolver solver(g, coeffs, driver);
  std::vector<SignedMeasure> states(65, SignedMeasure::constant_density(g, 0.03));
  for (auto _ : state) {
    solver.solve(0, states);
    benchmark::ClobberMemory();
  }
  state.SetLabel(state_dependent ? "state dependent" : "state independent");
}
BENCHMARK(BM_SolvePath)->Arg(0)->Arg(1);

void BM_SampleIncrements(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sample_increments(1, 64, 1.0 / 64.0, 1000, 7));
}
BENCHMARK(BM_SampleIncrements);

}  // namespace

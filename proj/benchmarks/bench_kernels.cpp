#include <benchmark/benchmark.h>

#include "dmpf/benchmark_models.hpp"
#include "dmpf/dmpf.hpp"
#include "dmpf/enkf.hpp"
#include "dmpf/particle_filter.hpp"
#include "dmpf/predictive_density.hpp"
#include "dmpf/rng.hpp"
#include "dmpf/trajectory.hpp"

namespace {

using namespace dmpf;

// A filtered Lorenz 63 state a few steps in, so the ensembles have realistic spread.
struct LorenzFixture {
  std::unique_ptr<StateSpaceModel> model = make_model("lorenz63");
  Trajectory traj;
  ParticleSet posterior;

  explicit LorenzFixture(Index particles) {
    // The default CLI trajectory; a noisy Euler path from an arbitrary seed may leave the attractor and diverge.
    RngStream rng(derive_seed(1, "trajectory", 0));
    traj = simulate(*model, rng);
    posterior = pf_init(*model, traj.observation(0), particles, rng);
    for (std::size_t t = 1; t <= 5; ++t) {
      posterior = pf_step(*model, posterior, t, traj.observation(t), rng);
    }
  }
};

void BM_PredictiveLogpdf(benchmark::State& state) {
  const auto m = static_cast<Index>(state.range(0));
  const LorenzFixture fx(m);
  const PredictiveDensity pd = PredictiveDensity::from_ancestors(*fx.model, fx.posterior, 6);
  RngStream rng(2);
  const PointSet points = pd.sample(m, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pd.logpdf(points));
  }
  state.counters["pairs/s"] = benchmark::Counter(static_cast<double>(m) * static_cast<double>(m),
                                                 benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_PredictiveLogpdf)->Arg(500)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_PfStep(benchmark::State& state) {
  const auto m = static_cast<Index>(state.range(0));
  const LorenzFixture fx(m);
  RngStream rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pf_step(*fx.model, fx.posterior, 6, fx.traj.observation(6), rng));
  }
}
BENCHMARK(BM_PfStep)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_EnkfStep(benchmark::State& state) {
  const auto m = static_cast<Index>(state.range(0));
  const LorenzFixture fx(m);
  RngStream rng(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enkf_step(*fx.model, fx.posterior.particles, 6, fx.traj.observation(6), rng));
  }
}
BENCHMARK(BM_EnkfStep)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_DmpfStep(benchmark::State& state) {
  const auto m = static_cast<Index>(state.range(0));
  const LorenzFixture fx(m);
  RngStream rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dmpf_step(*fx.model, fx.posterior, 6, fx.traj.observation(6), m, rng));
  }
}
BENCHMARK(BM_DmpfStep)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "heatpinn/fe_oracle.hpp"

using namespace heatpinn;

namespace {

void BM_Solve1d(benchmark::State& state) {
  MaterialProps props;
  MeshConfig mesh;
  mesh.elements_per_direction = static_cast<int>(state.range(0));
  mesh.scheme = state.range(1) ? TimeScheme::exponential : TimeScheme::backward_euler;
  const auto air = AirProfile::ramp_hold();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_1d(props, 0.03, 100, 50, air, 0, mesh));
  }
}
BENCHMARK(BM_Solve1d)
    ->ArgsProduct({{10, 40}, {0, 1}})
    ->ArgNames({"elements", "exponential"})
    ->Unit(benchmark::kMicrosecond);

void BM_Solve2d(benchmark::State& state) {
  MaterialProps props;
  MeshConfig mesh;
  mesh.elements_per_direction = static_cast<int>(state.range(0));
  std::array<EdgeBc, 4> edges{};
  edges[0].h = 100;
  edges[2].h = 100;
  const auto air = AirProfile::ramp_hold();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_2d(props, 0.06, 0.02, edges, air, 0, mesh));
  }
}
BENCHMARK(BM_Solve2d)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

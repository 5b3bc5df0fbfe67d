#include "pwnn/ode.hpp"

#include <benchmark/benchmark.h>

namespace bm = benchmark;
using namespace pwnn;

static void BM_Rk4Sir(bm::State& state) {
    const OdeProblem problem = registry_get("example2_sir");
    for (auto _ : state) {
        auto traj = rk4_solve(problem, 0.01, 50.0);
        bm::DoNotOptimize(traj);
    }
}

static void BM_Rk4Example4(bm::State& state) {
    const OdeProblem problem = registry_get("example4");
    for (auto _ : state) {
        auto traj = rk4_solve(problem, 0.01, 20.0);
        bm::DoNotOptimize(traj);
    }
}

BENCHMARK(BM_Rk4Sir)->Unit(bm::kMillisecond);
BENCHMARK(BM_Rk4Example4)->Unit(bm::kMillisecond);

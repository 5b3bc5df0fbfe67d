#include "pwnn/network.hpp"
#include "pwnn/ode.hpp"
#include "pwnn/trainer.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace bm = benchmark;
using namespace pwnn;

namespace {

LayerSpec spec_for(const OdeProblem& problem, std::vector<std::size_t> hidden) {
    return LayerSpec::make(hidden, problem.dimension);
}

}  // namespace

static void BM_SegmentLossGradient(bm::State& state) {
    const OdeProblem problem = registry_get("example3");
    const LayerSpec spec = spec_for(problem, {20, 20});
    const auto points = static_cast<std::size_t>(state.range(0));
    const auto colloc = sample_collocation(0.0, 10.0, points, SamplingMode::Equidistant, 1);
    SegmentLoss loss(spec, problem, colloc, 0.0, problem.initial_value, 0.0, 10.0);
    const NetworkParameters params = xavier_init(spec, 7);
    std::vector<double> grad(params.size());
    for (auto _ : state) {
        auto l = loss.evaluate_with_gradient(params.flat(), grad);
        bm::DoNotOptimize(l);
        bm::ClobberMemory();
    }
    state.counters["tape_nodes"] = static_cast<double>(loss.tape().size());
}

static void BM_SegmentLossForward(bm::State& state) {
    const OdeProblem problem = registry_get("example3");
    const LayerSpec spec = spec_for(problem, {20, 20});
    const auto colloc = sample_collocation(0.0, 10.0, static_cast<std::size_t>(state.range(0)), SamplingMode::Equidistant, 1);
    SegmentLoss loss(spec, problem, colloc, 0.0, problem.initial_value, 0.0, 10.0);
    const NetworkParameters params = xavier_init(spec, 7);
    for (auto _ : state) {
        auto l = loss.evaluate(params.flat());
        bm::DoNotOptimize(l);
    }
}

static void BM_TrainStepSir(bm::State& state) {
    const OdeProblem problem = registry_get("example2_sir");
    const LayerSpec spec = spec_for(problem, {20});
    const auto colloc = sample_collocation(0.0, 5.0, 100, SamplingMode::Equidistant, 1);
    SegmentLoss loss(spec, problem, colloc, 0.0, problem.initial_value, 0.0, 5.0);
    NetworkParameters params = xavier_init(spec, 3);
    std::vector<double> theta = params.export_flat();
    std::vector<double> grad(theta.size());
    AdamState adam(theta.size());
    for (auto _ : state) {
        loss.evaluate_with_gradient(theta, grad);
        adam_step(theta, grad, adam, 1e-3);
        bm::ClobberMemory();
    }
}

static void BM_NetworkEvaluate(bm::State& state) {
    const LayerSpec spec = LayerSpec::make(std::vector<std::size_t>{20, 20}, 2);
    const SegmentNetwork net(xavier_init(spec, 1), 0.0, 10.0, {0.0, 0.0});
    double x = 0.0;
    for (auto _ : state) {
        auto v = evaluate_with_derivative(net, x);
        bm::DoNotOptimize(v);
        x += 1e-3;
    }
}

BENCHMARK(BM_SegmentLossGradient)->Arg(100)->Arg(200)->Arg(500);
BENCHMARK(BM_SegmentLossForward)->Arg(100);
BENCHMARK(BM_TrainStepSir);
BENCHMARK(BM_NetworkEvaluate);

#include "deeptrend/dataio.hpp"
#include "deeptrend/detrend.hpp"
#include "deeptrend/layers.hpp"
#include "deeptrend/model.hpp"
#include "deeptrend/optim.hpp"

#include <benchmark/benchmark.h>

using namespace deeptrend;

namespace {

void BM_DenseForwardBackward(benchmark::State& state) {
    const auto width = static_cast<std::size_t>(state.range(0));
    RandomSource rng(1);
    DenseLayer layer = DenseLayer::random(width, width, Activation::relu, rng);
    const Matrix x = init_uniform(width, 1, 1.0, rng);
    const Matrix dy = init_uniform(width, 1, 1.0, rng);
    DenseCache cache;
    for (auto _ : state) {
        dense_forward(layer, x, cache);
        benchmark::DoNotOptimize(dense_backward(layer, cache, dy));
    }
}
BENCHMARK(BM_DenseForwardBackward)->Arg(24)->Arg(128);

void BM_LstmForward(benchmark::State& state) {
    const auto hidden = static_cast<std::size_t>(state.range(0));
    RandomSource rng(2);
    const LstmLayer layer = LstmLayer::random(2, hidden, rng);
    const Matrix seq = init_uniform(12, 2, 1.0, rng);
    LstmTrace trace;
    for (auto _ : state) {
        lstm_forward(layer, seq, trace);
        benchmark::DoNotOptimize(trace.hidden.values().data());
    }
}
BENCHMARK(BM_LstmForward)->Arg(32)->Arg(128);

void BM_LstmBackward(benchmark::State& state) {
    const auto hidden = static_cast<std::size_t>(state.range(0));
    RandomSource rng(3);
    LstmLayer layer = LstmLayer::random(2, hidden, rng);
    const Matrix seq = init_uniform(12, 2, 1.0, rng);
    const Matrix dh = init_uniform(hidden, 1, 1.0, rng);
    const LstmTrace trace = lstm_forward(layer, seq);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lstm_backward(layer, trace, dh.values()));
    }
}
BENCHMARK(BM_LstmBackward)->Arg(32)->Arg(128);

void BM_DeepTrendPredict(benchmark::State& state) {
    DeepTrendModel model({12, 128, 128}, 4);
    model.restore_phase(Phase::finetuned); // inference cost only; weights stay random
    RandomSource rng(4);
    std::vector<double> flow(12), trend(12);
    for (auto& v : flow) v = rng.normal();
    for (auto& v : trend) v = rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.predict(flow, trend));
    }
}
BENCHMARK(BM_DeepTrendPredict);

void BM_ComputeTrend(benchmark::State& state) {
    SyntheticSpec spec;
    spec.weeks = static_cast<std::size_t>(state.range(0));
    spec.stations = 1;
    const auto series = generate_synthetic(spec).station(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_trend(series));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(series.size()));
}
BENCHMARK(BM_ComputeTrend)->Arg(4)->Arg(12);

void BM_AdamStep(benchmark::State& state) {
    RandomSource rng(5);
    LstmLayer layer = LstmLayer::random(2, 128, rng);
    std::vector<ParameterRef> params;
    layer.append_parameters(params, "lstm");
    for (const auto& p : params) {
        for (auto& g : p.grad->values()) g = rng.normal();
    }
    AdamState adam(0.001);
    for (auto _ : state) {
        adam_step(params, adam);
    }
}
BENCHMARK(BM_AdamStep);

} // namespace

BENCHMARK_MAIN();

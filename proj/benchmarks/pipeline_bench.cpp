#include <benchmark/benchmark.h>

#include "adapedit/controller.hpp"
#include "adapedit/toy_backend.hpp"

namespace {

adapedit::EditConfig demo_config(int steps) {
    adapedit::EditConfig cfg;
    cfg.prompt = "a dog standing on the grass";
    cfg.edit = "a dog sitting on the grass";
    cfg.steps = steps;
    return cfg;
}

void BM_ToyStep(benchmark::State& state) {
    adapedit::ToyBackend backend;
    adapedit::SessionParams p;
    p.steps = 1000;
    p.prompt = "a dog standing on the grass";
    p.edit = p.prompt;
    backend.init(p);
    int t = p.steps;
    for (auto _ : state) {
        if (t == 0) {
            state.PauseTiming();
            backend.init(p);
            t = p.steps;
            state.ResumeTiming();
        }
        benchmark::DoNotOptimize(backend.step(t--, adapedit::Branch::Source, {}));
    }
}
BENCHMARK(BM_ToyStep);

void BM_RunEdit(benchmark::State& state) {
    const auto cfg = demo_config(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        adapedit::ToyBackend backend;
        benchmark::DoNotOptimize(adapedit::run_edit(cfg, backend));
    }
}
BENCHMARK(BM_RunEdit)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

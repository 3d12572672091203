#include <benchmark/benchmark.h>

#include "mechanic/base_opt.hpp"
#include "mechanic/mechanic.hpp"
#include "mechanic/rng.hpp"
#include "mechanic/tuner.hpp"

namespace {

void bm_tuner_step(benchmark::State& state) {
    mechanic::TunerParams params;
    mechanic::TunerState tuner = mechanic::tuner_init(params);
    mechanic::Rng rng(1);
    std::vector<double> feed(1024);
    for (double& h : feed)
        h = rng.normal();
    std::size_t i = 0;
    for (auto _ : state) {
        mechanic::tuner_step(tuner, feed[i++ & 1023], params);
        benchmark::DoNotOptimize(tuner.s.data());
    }
}
BENCHMARK(bm_tuner_step);

// Full wrapped update at a given dimension; the interesting number is the
// overhead on top of the base optimizer's own O(d) work.
void bm_mechanic_step(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    mechanic::Rng rng(2);
    mechanic::ParamVector x0(dim, 0.0);
    mechanic::Mechanic mech(x0, mechanic::TunerParams{});
    mechanic::BaseOptimizer base({});
    mechanic::ParamVector g(dim);
    for (auto _ : state) {
        for (double& gi : g)
            gi = rng.normal();
        const mechanic::ParamVector u = base.step(g, mech.x(), 0.01);
        benchmark::DoNotOptimize(mech.step(g, u).data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(dim));
}
BENCHMARK(bm_mechanic_step)->Arg(1 << 6)->Arg(1 << 10)->Arg(1 << 14);

void bm_sgd_step(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    mechanic::Rng rng(3);
    mechanic::ParamVector x(dim, 0.0), g(dim);
    for (auto _ : state) {
        for (double& gi : g)
            gi = rng.normal();
        const mechanic::ParamVector u = mechanic::sgd_update(g, 0.01);
        for (std::size_t i = 0; i < dim; ++i)
            x[i] += u[i];
        benchmark::DoNotOptimize(x.data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(dim));
}
BENCHMARK(bm_sgd_step)->Arg(1 << 6)->Arg(1 << 10)->Arg(1 << 14);

} // namespace

BENCHMARK_MAIN();

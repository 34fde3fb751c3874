// Serial reference kernel against the OpenMP kernel, one particle step.
#include <vector>

#include <benchmark/benchmark.h>

#include "mvsde/integrator.hpp"
#include "mvsde/kernels.hpp"

namespace {

using namespace mvsde;

struct Fixture {
    CoefficientModel model;
    BrownianDriver driver{7};
    Ensemble ensemble;
    EmpiricalMeasure measure;
    std::vector<double> next;

    Fixture(CoefficientModel m, std::size_t n)
        : model(std::move(m)),
          ensemble(sample_initial(NormalLaw{}, n, 1, driver)),
          measure(ensemble.measure()),
          next(ensemble.states.size()) {}
};

template <bool Parallel>
void step(benchmark::State& state, CoefficientModel model) {
    Fixture f(std::move(model), static_cast<std::size_t>(state.range(0)));
    StepIndex k = 0;
    for (auto _ : state) {
        const kernels::StepArgs args{f.model, f.measure, f.driver, k++, 1e-3, kernels::Taming::tamed};
        auto fail = Parallel ? kernels::advance_parallel(args, f.ensemble.states, f.ensemble.ids, 1, f.next)
                             : kernels::advance_serial(args, f.ensemble.states, f.ensemble.ids, 1, f.next);
        benchmark::DoNotOptimize(fail);
        benchmark::DoNotOptimize(f.next.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void serial_example61(benchmark::State& s) { step<false>(s, example61()); }
void parallel_example61(benchmark::State& s) { step<true>(s, example61()); }
void serial_double_kernel(benchmark::State& s) { step<false>(s, default_double_kernel()); }
void parallel_double_kernel(benchmark::State& s) { step<true>(s, default_double_kernel()); }

} // namespace

BENCHMARK(serial_example61)->RangeMultiplier(8)->Range(256, 1 << 17);
BENCHMARK(parallel_example61)->RangeMultiplier(8)->Range(256, 1 << 17)->UseRealTime();
BENCHMARK(serial_double_kernel)->RangeMultiplier(4)->Range(32, 256);
BENCHMARK(parallel_double_kernel)->RangeMultiplier(4)->Range(32, 256)->UseRealTime();

BENCHMARK_MAIN();

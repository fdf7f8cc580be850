#include <benchmark/benchmark.h>

#include "ttc/allocator.hpp"
#include "ttc/theory.hpp"

namespace
{
ttc::SyntheticInstance instance(std::size_t n)
{
    return ttc::SyntheticInstance::from_deltas(ttc::theory::harmonic_deltas(n), 0.3, 20, 1.0);
}

void BM_RunAllocation(benchmark::State& state)
{
    auto const rule = static_cast<ttc::Rule>(state.range(0));
    auto const n = static_cast<std::size_t>(state.range(1));
    ttc::SyntheticBackend backend(instance(n), 0);
    ttc::AllocConfig config;
    config.rule = rule;
    config.total_budget = 8 * n;
    config.lambda = ttc::default_lambda(rule);
    for (auto _ : state)
    {
        backend.reset();
        auto run = ttc::run_allocation(backend, config, {false});
        benchmark::DoNotOptimize(run.ledger.spent);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * config.total_budget));
    state.SetLabel(std::string(ttc::to_string(rule)));
}
BENCHMARK(BM_RunAllocation)->ArgsProduct({{0, 1, 2, 3, 4}, {100, 500}});

void BM_SelectNext(benchmark::State& state)
{
    auto const n = static_cast<std::size_t>(state.range(0));
    ttc::SyntheticBackend backend(instance(n), 1);
    std::vector<ttc::QueryState> states;
    for (auto const& q : backend.queries())
    {
        ttc::QueryState s(q);
        for (auto const& r : backend.generate_batch(q, 4, ttc::ReplayExhaustedPolicy::error))
            ttc::record_generation_inplace(s, r, 2.0);
        states.push_back(std::move(s));
    }
    ttc::AllocConfig config;
    config.rule = ttc::Rule::entropy;
    config.lambda = 3.0;
    for (auto _ : state)
        benchmark::DoNotOptimize(ttc::select_next(states, config));
}
BENCHMARK(BM_SelectNext)->RangeMultiplier(4)->Range(16, 4096);

void BM_MonteCarlo(benchmark::State& state)
{
    auto deltas = ttc::theory::harmonic_deltas(100);
    for (auto _ : state)
        benchmark::DoNotOptimize(ttc::theory::monte_carlo_budget_to_solve_all(deltas, ttc::Rule::elimination, 50, 0, 1));
}
BENCHMARK(BM_MonteCarlo)->Unit(benchmark::kMillisecond);
}  // namespace

BENCHMARK_MAIN();

#include "ttc/theory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "ttc/allocator.hpp"
#include "ttc/backend.hpp"
#include "ttc/rng.hpp"

namespace ttc::theory
{
namespace
{
void require_positive_deltas(std::span<double const> deltas, char const* op)
{
    if (deltas.empty())
        throw InvalidArgument(std::string(op) + ": no queries");
    for (double d : deltas)
        if (!(d > 0.0 && d <= 1.0))
            throw InvalidArgument(std::string(op) + ": every delta must lie in (0, 1], got "
                                  + std::to_string(d));
}

void require_delta(double delta, char const* op)
{
    if (!(delta > 0.0 && delta < 1.0))
        throw InvalidArgument(std::string(op) + ": delta must lie in (0, 1)");
}

std::vector<double> spends_to_solve_all(std::vector<double> const& deltas, Rule rule,
                                        std::uint64_t trials, std::uint64_t seed, unsigned threads)
{
    require_positive_deltas(deltas, "monte_carlo_budget_to_solve_all");
    if (trials == 0)
        throw InvalidArgument("monte_carlo_budget_to_solve_all: trials must be positive");
    if (rule == Rule::uniform)
        throw InvalidArgument("monte_carlo_budget_to_solve_all: uniform allocation never stops early");

    auto const instance = SyntheticInstance::from_deltas(deltas);
    AllocConfig config;
    config.rule = rule;
    config.total_budget = unbounded;
    config.lambda = default_lambda(rule);

    std::vector<double> spends(trials);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (auto t = next++; t < trials; t = next++)
        {
            SyntheticBackend backend(instance, rng::substream_key(seed, t));
            auto run = run_allocation(backend, config, RunOptions{.record_trace = false});
            spends[t] = static_cast<double>(run.ledger.spent);
        }
    };

    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, trials));
    if (threads <= 1)
    {
        worker();
    }
    else
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i)
            pool.emplace_back(worker);
    }
    return spends;
}
}  // namespace

double per_query_sample_bound(double delta_x, double dbar)
{
    if (!(delta_x > 0.0 && delta_x <= 1.0))
        throw InvalidArgument("per_query_sample_bound: delta_x must lie in (0, 1]; unsolvable "
                              "queries have no finite bound");
    if (!(dbar > 0.0 && dbar < 1.0))
        throw InvalidArgument("per_query_sample_bound: dbar must lie in (0, 1)");
    return std::log(1.0 / dbar) / delta_x;
}

std::uint64_t uniform_per_query_samples(std::span<double const> deltas, double delta)
{
    require_positive_deltas(deltas, "uniform_required_budget");
    require_delta(delta, "uniform_required_budget");
    double const target = 1.0 - delta;
    for (std::uint64_t m = 1; m <= max_uniform_scan; ++m)
    {
        double p = 1.0;
        for (double d : deltas)
            p *= 1.0 - std::pow(1.0 - d, static_cast<double>(m));
        if (p >= target)
            return m;
    }
    throw Error("uniform_required_budget: no per-query count up to "
                + std::to_string(max_uniform_scan) + " reaches the target");
}

std::uint64_t uniform_required_budget(std::span<double const> deltas, double delta)
{
    return uniform_per_query_samples(deltas, delta) * deltas.size();
}

double failure_lower_bound(double delta_x)
{
    if (!(delta_x > 0.0 && delta_x < 1.0))
        throw InvalidArgument("failure_lower_bound: delta_x must lie in (0, 1)");
    double const bound = std::exp(-1.0 / (1.0 - delta_x));
    double const tail = std::pow(1.0 - delta_x, 1.0 / delta_x);
    if (tail < bound - 1e-12)
        throw Error("failure_lower_bound: (1-d)^(1/d) < e^(-1/(1-d)) at d = " + std::to_string(delta_x));
    return bound;
}

double adaptive_budget_bound(std::span<double const> deltas, double delta)
{
    require_positive_deltas(deltas, "adaptive_budget_bound");
    require_delta(delta, "adaptive_budget_bound");
    double const dbar = delta / static_cast<double>(deltas.size());
    double total = 0.0;
    for (double d : deltas)
        total += per_query_sample_bound(d, dbar);
    return total;
}

double expected_elimination_spend(std::span<double const> deltas)
{
    require_positive_deltas(deltas, "expected_elimination_spend");
    double total = 0.0;
    for (double d : deltas)
        total += 1.0 / d;
    return total;
}

MeanStd monte_carlo_budget_to_solve_all(std::vector<double> const& deltas, Rule rule,
                                        std::uint64_t trials, std::uint64_t seed, unsigned threads)
{
    auto spends = spends_to_solve_all(deltas, rule, trials, seed, threads);
    return mean_std(spends);
}

BudgetBounds budget_bounds(std::vector<double> const& deltas, double delta, Rule rule,
                           std::uint64_t trials, std::uint64_t seed, unsigned threads)
{
    BudgetBounds out;
    out.adaptive_closed_form = adaptive_budget_bound(deltas, delta);
    out.expected_adaptive = expected_elimination_spend(deltas);
    out.uniform_per_query = uniform_per_query_samples(deltas, delta);
    out.uniform_required = out.uniform_per_query * deltas.size();

    auto spends = spends_to_solve_all(deltas, rule, trials, seed, threads);
    auto ms = mean_std(spends);
    out.mc_adaptive_mean = ms.mean;
    out.mc_adaptive_stddev = ms.stddev;
    auto within = std::count_if(spends.begin(), spends.end(),
                                [&](double s) { return s <= out.adaptive_closed_form; });
    out.mc_success_rate = static_cast<double>(within) / static_cast<double>(spends.size());
    return out;
}

std::vector<double> harmonic_deltas(std::size_t n)
{
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = static_cast<double>(i + 1) / static_cast<double>(n);
    return d;
}

}  // namespace ttc::theory

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ttc/metrics.hpp"
#include "ttc/types.hpp"

namespace ttc::theory
{

/// Generations after which a query with success probability delta_x is
/// answered with probability at least 1 - dbar: ln(1/dbar) / delta_x.
double per_query_sample_bound(double delta_x, double dbar);

/// Upper cutoff on the per-query scan in uniform_required_budget.
inline constexpr std::uint64_t max_uniform_scan = 10'000'000;

/// Smallest per-query count m with prod_x (1 - (1 - delta_x)^m) >= 1 - delta.
std::uint64_t uniform_per_query_samples(std::span<double const> deltas, double delta);

/// n * m*, the total a uniform allocation needs to answer every query with
/// probability at least 1 - delta.
std::uint64_t uniform_required_budget(std::span<double const> deltas, double delta);

/// e^{-1/(1-delta_x)}, a lower bound on (1 - delta_x)^{1/delta_x}. Throws
/// Error if the bound fails numerically at delta_x.
double failure_lower_bound(double delta_x);

/// Sum over x of ln(n/delta) / delta_x: the adaptive budget from the union bound.
double adaptive_budget_bound(std::span<double const> deltas, double delta);

/// Sum over x of 1/delta_x, the expected Elimination spend with K = 1.
double expected_elimination_spend(std::span<double const> deltas);

/// Runs `rule` with unlimited budget until every query is solved, once per
/// trial; trial t uses seed mix(seed, t). Trials run on `threads` workers
/// (0 = hardware concurrency) and are reduced in trial order.
MeanStd monte_carlo_budget_to_solve_all(std::vector<double> const& deltas,
                                        Rule rule,
                                        std::uint64_t trials,
                                        std::uint64_t seed,
                                        unsigned threads = 0);

struct BudgetBounds
{
    double adaptive_closed_form = 0.0;  // sum ln(n/delta)/delta_x
    double expected_adaptive = 0.0;     // sum 1/delta_x
    std::uint64_t uniform_per_query = 0;
    std::uint64_t uniform_required = 0;
    double mc_adaptive_mean = 0.0;
    double mc_adaptive_stddev = 0.0;
    double mc_success_rate = 0.0;  // trials whose spend stayed within adaptive_closed_form

    double separation_ratio() const { return static_cast<double>(uniform_required) / mc_adaptive_mean; }
};

/// Everything the theory report prints for one instance.
BudgetBounds budget_bounds(std::vector<double> const& deltas, double delta, Rule rule,
                           std::uint64_t trials, std::uint64_t seed, unsigned threads = 0);

/// deltas = [1/n, 2/n, ..., 1].
std::vector<double> harmonic_deltas(std::size_t n);

}  // namespace ttc::theory

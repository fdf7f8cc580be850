#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttc/allocator.hpp"
#include "ttc/backend.hpp"

namespace ttc
{

struct GroupSpec
{
    std::string label;
    std::size_t count = 1;
    double delta = 0.0;
    double invalid_prob = 0.0;
    std::size_t wrong_vocab = 1;
    double wrong_skew = 0.0;
};

/// A synthetic population split into labelled groups; B = n * avg_budget.
struct PopulationSpec
{
    std::vector<GroupSpec> groups;
    std::uint64_t avg_budget = 1;

    void validate() const;
    std::size_t size() const;
    std::uint64_t total_budget() const { return avg_budget * size(); }
};

struct Population
{
    SyntheticInstance instance;
    std::vector<std::size_t> group_of;  // group index per query
};

/// Lays groups out contiguously in declaration order.
Population build_population(PopulationSpec const& spec);

struct GroupStats
{
    std::string label;
    double mean_spend = 0.0;        // mean c(x) over the group's queries
    double frac_above_avg = 0.0;    // fraction with c(x) > avg_budget
    double coverage = 0.0;
};

/// Buckets one run's final per-query spend and coverage by group.
std::vector<GroupStats> group_stats(PopulationSpec const& spec, Population const& population,
                                    RunResult const& run, std::uint64_t avg_budget);

struct SeedGroupReport
{
    std::uint64_t seed = 0;
    std::vector<GroupStats> groups;
};

struct GroupAllocationReport
{
    std::vector<SeedGroupReport> per_seed;
    std::vector<GroupStats> mean;  // averaged over seeds
};

/// Runs config.rule on the population once per seed (config.total_budget is
/// overridden by n * avg_budget) and buckets final per-query spend by group.
GroupAllocationReport group_allocation_report(PopulationSpec const& population,
                                              AllocConfig config,
                                              std::vector<std::uint64_t> const& seeds);

/// Fraction of seeds in which group `a` received strictly more mean spend than group `b`.
double fraction_of_seeds_exceeding(GroupAllocationReport const& report, std::size_t a, std::size_t b);

}  // namespace ttc

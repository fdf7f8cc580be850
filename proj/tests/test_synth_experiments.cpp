#include <doctest.h>

#include "ttc/synth_experiments.hpp"

using namespace ttc;

namespace
{
AllocConfig config_for(Rule rule)
{
    AllocConfig c;
    c.rule = rule;
    c.lambda = default_lambda(rule);
    return c;
}

std::vector<std::uint64_t> seeds(std::size_t n)
{
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i)
        s[i] = i;
    return s;
}

PopulationSpec easy_hard(std::uint64_t avg_budget)
{
    return PopulationSpec{{GroupSpec{"easy", 10, 1.0}, GroupSpec{"hard", 10, 0.0}}, avg_budget};
}

PopulationSpec solvable_unsolvable()
{
    return PopulationSpec{{GroupSpec{"solvable", 50, 0.05, 0.1, 50, 0.5},
                           GroupSpec{"unsolvable", 50, 0.0, 0.9, 50, 0.5}},
                          16};
}
}  // namespace

TEST_CASE("population layout")
{
    auto spec = easy_hard(4);
    CHECK(spec.size() == 20);
    CHECK(spec.total_budget() == 80);
    auto pop = build_population(spec);
    CHECK(pop.instance.queries.size() == 20);
    CHECK(pop.group_of[9] == 0);
    CHECK(pop.group_of[10] == 1);
    CHECK(pop.instance.params[12].delta == 0.0);

    CHECK_THROWS_AS(build_population(PopulationSpec{{}, 4}), ConfigError);
    CHECK_THROWS_AS(build_population(PopulationSpec{{GroupSpec{"a", 1, 0.5}, GroupSpec{"a", 1, 0.5}}, 4}),
                    ConfigError);
    CHECK_THROWS_AS(build_population(PopulationSpec{{GroupSpec{"a", 0, 0.5}}, 4}), ConfigError);
}

TEST_CASE("elimination moves the easy group's budget to the hard group")
{
    auto report = group_allocation_report(easy_hard(32), config_for(Rule::elimination), seeds(3));
    REQUIRE(report.mean.size() == 2);
    CHECK(report.mean[0].mean_spend == 1.0);
    CHECK(report.mean[1].mean_spend == 63.0);
    CHECK(report.mean[0].frac_above_avg == 0.0);
    CHECK(report.mean[1].frac_above_avg == 1.0);
    CHECK(report.mean[0].coverage == 1.0);
    CHECK(report.mean[1].coverage == 0.0);
    CHECK(fraction_of_seeds_exceeding(report, 1, 0) == 1.0);
}

TEST_CASE("uniform spends exactly the average budget per query")
{
    auto report = group_allocation_report(easy_hard(32), config_for(Rule::uniform), seeds(2));
    CHECK(report.mean[0].mean_spend == 32.0);
    CHECK(report.mean[1].mean_spend == 32.0);
    CHECK(fraction_of_seeds_exceeding(report, 1, 0) == 0.0);
}

TEST_CASE("entropy steers spend toward solvable queries")
{
    auto report = group_allocation_report(solvable_unsolvable(), config_for(Rule::entropy), seeds(20));
    CHECK(report.mean[0].mean_spend > report.mean[1].mean_spend);
    CHECK(fraction_of_seeds_exceeding(report, 0, 1) >= 0.8);
}

TEST_CASE("group_allocation_report needs a seed")
{
    CHECK_THROWS_AS(group_allocation_report(easy_hard(4), config_for(Rule::elimination), {}), InvalidArgument);
}

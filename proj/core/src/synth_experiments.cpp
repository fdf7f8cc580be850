#include "ttc/synth_experiments.hpp"

#include <set>

namespace ttc
{

void PopulationSpec::validate() const
{
    if (groups.empty())
        throw ConfigError("population: at least one group is required");
    if (avg_budget == 0)
        throw ConfigError("population: avg_budget must be positive");
    std::set<std::string> labels;
    for (auto const& g : groups)
    {
        if (g.count == 0)
            throw ConfigError("population group '" + g.label + "': count must be at least 1");
        if (!labels.insert(g.label).second)
            throw ConfigError("population: duplicate group label '" + g.label + "'");
    }
}

std::size_t PopulationSpec::size() const
{
    std::size_t n = 0;
    for (auto const& g : groups)
        n += g.count;
    return n;
}

Population build_population(PopulationSpec const& spec)
{
    spec.validate();
    Population pop;
    pop.instance.queries = make_query_ids(spec.size());
    for (std::size_t gi = 0; gi < spec.groups.size(); ++gi)
    {
        auto const& g = spec.groups[gi];
        for (std::size_t j = 0; j < g.count; ++j)
        {
            pop.instance.params.push_back(
                SyntheticQuery{g.delta, g.invalid_prob, g.wrong_vocab, g.wrong_skew});
            pop.group_of.push_back(gi);
        }
    }
    pop.instance.validate();
    return pop;
}

std::vector<GroupStats> group_stats(PopulationSpec const& spec, Population const& population,
                                    RunResult const& run, std::uint64_t avg_budget)
{
    auto const n_groups = spec.groups.size();
    std::vector<double> spend(n_groups, 0.0), above(n_groups, 0.0), covered(n_groups, 0.0);
    for (std::size_t i = 0; i < run.states.size(); ++i)
    {
        auto g = population.group_of.at(i);
        auto c = run.ledger.per_query[i];
        spend[g] += static_cast<double>(c);
        if (c > avg_budget)
            above[g] += 1.0;
        for (auto const& r : run.states[i].responses)
        {
            if (r.correct.value_or(false))
            {
                covered[g] += 1.0;
                break;
            }
        }
    }

    std::vector<GroupStats> out;
    for (std::size_t g = 0; g < n_groups; ++g)
    {
        double cnt = static_cast<double>(spec.groups[g].count);
        out.push_back(GroupStats{spec.groups[g].label, spend[g] / cnt, above[g] / cnt, covered[g] / cnt});
    }
    return out;
}

GroupAllocationReport group_allocation_report(PopulationSpec const& population,
                                              AllocConfig config,
                                              std::vector<std::uint64_t> const& seeds)
{
    if (seeds.empty())
        throw InvalidArgument("group_allocation_report: at least one seed is required");
    auto const pop = build_population(population);
    auto const n_groups = population.groups.size();
    config.total_budget = population.total_budget();

    GroupAllocationReport report;
    report.mean.resize(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g)
        report.mean[g].label = population.groups[g].label;

    for (auto seed : seeds)
    {
        config.seed = seed;
        SyntheticBackend backend(pop.instance, seed);
        auto run = run_allocation(backend, config, RunOptions{.record_trace = false});

        SeedGroupReport sr{seed, group_stats(population, pop, run, population.avg_budget)};
        for (std::size_t g = 0; g < n_groups; ++g)
        {
            report.mean[g].mean_spend += sr.groups[g].mean_spend;
            report.mean[g].frac_above_avg += sr.groups[g].frac_above_avg;
            report.mean[g].coverage += sr.groups[g].coverage;
        }
        report.per_seed.push_back(std::move(sr));
    }

    double const n_seeds = static_cast<double>(seeds.size());
    for (auto& m : report.mean)
    {
        m.mean_spend /= n_seeds;
        m.frac_above_avg /= n_seeds;
        m.coverage /= n_seeds;
    }
    return report;
}

double fraction_of_seeds_exceeding(GroupAllocationReport const& report, std::size_t a, std::size_t b)
{
    if (report.per_seed.empty())
        return 0.0;
    std::size_t wins = 0;
    for (auto const& s : report.per_seed)
        if (s.groups.at(a).mean_spend > s.groups.at(b).mean_spend)
            ++wins;
    return static_cast<double>(wins) / static_cast<double>(report.per_seed.size());
}

}  // namespace ttc

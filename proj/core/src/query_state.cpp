#include "ttc/types.hpp"

#include <set>

namespace ttc
{

std::vector<QueryId> make_query_ids(std::size_t n)
{
    std::vector<QueryId> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        ids.push_back(QueryId{"q" + std::to_string(i), i});
    return ids;
}

void validate_query_ids(std::vector<QueryId> const& queries)
{
    std::set<std::string> seen;
    for (std::size_t i = 0; i < queries.size(); ++i)
    {
        if (queries[i].index != i)
            throw InvalidArgument("query '" + queries[i].id + "' has index "
                                  + std::to_string(queries[i].index) + ", expected "
                                  + std::to_string(i));
        if (!seen.insert(queries[i].id).second)
            throw InvalidArgument("duplicate query id '" + queries[i].id + "'");
    }
}

std::string_view to_string(QueryStatus status)
{
    switch (status)
    {
        case QueryStatus::active: return "active";
        case QueryStatus::eliminated: return "eliminated";
        case QueryStatus::capped: return "capped";
    }
    return "?";
}

void record_generation_inplace(QueryState& state, GenerationResult const& result, double gamma)
{
    if (!(result.reward >= 0.0 && result.reward <= 1.0))
        throw InvalidArgument("reward " + std::to_string(result.reward) + " for query '"
                              + state.query.id + "' is outside [0, 1]");

    state.responses.push_back(result);
    ++state.n_generations;
    ++state.answer_counts[result.answer_key];
    state.reward_sum += result.reward;

    // Strict improvement keeps the earliest maximiser.
    if (!state.best_reward || result.reward > *state.best_reward)
    {
        state.best_reward = result.reward;
        state.best_index = state.responses.size() - 1;
    }
    if (result.reward >= gamma)
        state.status = QueryStatus::eliminated;
}

QueryState record_generation(QueryState state, GenerationResult const& result, double gamma)
{
    record_generation_inplace(state, result, gamma);
    return state;
}

double empirical_mean_reward(QueryState const& state)
{
    if (state.n_generations == 0)
        throw InvalidArgument("empirical mean reward undefined for query '" + state.query.id
                              + "' with no generations");
    return state.reward_sum / static_cast<double>(state.n_generations);
}

void BudgetLedger::charge(std::size_t query_index, std::uint64_t amount)
{
    if (amount > remaining())
        throw Error("budget overrun: charge of " + std::to_string(amount) + " exceeds remaining "
                    + std::to_string(remaining()));
    if (query_index >= per_query.size())
        per_query.resize(query_index + 1, 0);
    per_query[query_index] += amount;
    spent += amount;
}

std::string_view to_string(Rule rule)
{
    switch (rule)
    {
        case Rule::elimination: return "elimination";
        case Rule::ucb: return "ucb";
        case Rule::gap: return "gap";
        case Rule::entropy: return "entropy";
        case Rule::uniform: return "uniform";
    }
    return "?";
}

Rule parse_rule(std::string_view name)
{
    for (Rule r : {Rule::elimination, Rule::ucb, Rule::gap, Rule::entropy, Rule::uniform})
        if (to_string(r) == name)
            return r;
    throw ConfigError("unknown rule '" + std::string(name)
                      + "' (expected elimination, ucb, gap, entropy or uniform)");
}

std::string_view to_string(ReplayExhaustedPolicy policy)
{
    return policy == ReplayExhaustedPolicy::error ? "error" : "cap";
}

ReplayExhaustedPolicy parse_replay_policy(std::string_view name)
{
    if (name == "error")
        return ReplayExhaustedPolicy::error;
    if (name == "cap")
        return ReplayExhaustedPolicy::cap;
    throw ConfigError("on_replay_exhausted: unknown policy '" + std::string(name)
                      + "' (expected error or cap)");
}

void AllocConfig::validate() const
{
    if (k_per_step == 0)
        throw ConfigError("k: must be a positive integer");
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw ConfigError("gamma: must lie in [0, 1]");
    if (!(lambda >= 0.0))
        throw ConfigError("lambda: must be nonnegative");
    if (!(gamma_slack >= 0.0) || gamma - gamma_slack < 0.0)
        throw ConfigError("gamma_slack: must be nonnegative and not exceed gamma");
    if (max_samples == 0)
        throw ConfigError("max_samples: must be positive or \"unbounded\"");
}

double default_lambda(Rule rule)
{
    return rule == Rule::entropy ? 3.0 : 1.0;
}

}  // namespace ttc

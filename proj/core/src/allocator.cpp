#include "ttc/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ttc
{
namespace
{
constexpr double inf = std::numeric_limits<double>::infinity();

double inv_sqrt(std::size_t n)
{
    return 1.0 / std::sqrt(static_cast<double>(n));
}

/// Incrementally maintained coverage/accuracy counts for the trace.
class MetricTracker
{
  public:
    explicit MetricTracker(std::size_t n) : covered_(n, false), accurate_(n, false) {}

    void update(QueryState const& state, GenerationResult const& r)
    {
        if (!r.correct)
        {
            available_ = false;
            return;
        }
        auto i = state.query.index;
        if (*r.correct && !covered_[i])
        {
            covered_[i] = true;
            ++n_covered_;
        }
        auto const& best = state.responses[*state.best_index];
        bool acc = best.correct.value_or(false);
        if (acc != accurate_[i])
        {
            accurate_[i] = acc;
            n_accurate_ += acc ? 1 : -1;
        }
    }

    std::optional<double> coverage() const
    {
        if (!available_)
            return std::nullopt;
        return static_cast<double>(n_covered_) / static_cast<double>(covered_.size());
    }

    std::optional<double> accuracy() const
    {
        if (!available_)
            return std::nullopt;
        return static_cast<double>(n_accurate_) / static_cast<double>(accurate_.size());
    }

  private:
    std::vector<bool> covered_;
    std::vector<bool> accurate_;
    std::size_t n_covered_ = 0;
    std::ptrdiff_t n_accurate_ = 0;
    bool available_ = true;
};

class Engine
{
  public:
    Engine(Backend& backend, AllocConfig const& config, RunOptions options)
        : backend_(backend), config_(config), options_(options), metrics_(backend.queries().size())
    {
        auto const& queries = backend.queries();
        if (queries.empty())
            throw InvalidArgument("run_allocation: query set is empty");
        validate_query_ids(queries);

        result_.trace.rule = config.rule;
        result_.ledger.total = config.total_budget;
        result_.ledger.per_query.assign(queries.size(), 0);
        result_.states.reserve(queries.size());
        for (auto const& q : queries)
            result_.states.emplace_back(q);
        n_active_ = queries.size();
    }

    RunResult run() &&
    {
        switch (config_.rule)
        {
            case Rule::elimination: run_elimination(); break;
            case Rule::uniform: run_uniform(); break;
            case Rule::ucb:
            case Rule::gap:
            case Rule::entropy: run_single_selection(); break;
        }
        return std::move(result_);
    }

  private:
    std::uint64_t remaining() const { return result_.ledger.remaining(); }

    std::uint64_t cap_room(QueryState const& s) const
    {
        if (config_.max_samples == unbounded)
            return unbounded;
        return config_.max_samples - std::min<std::uint64_t>(config_.max_samples, s.n_generations);
    }

    /// Generates and applies one block of up to k generations for query i.
    /// Returns the number of generations actually applied.
    std::uint64_t allocate_block(std::size_t i, std::uint64_t k, double threshold)
    {
        auto& state = result_.states[i];
        auto results = backend_.generate_batch(state.query, static_cast<std::size_t>(k),
                                               config_.on_replay_exhausted);
        std::sort(results.begin(), results.end(), [](auto const& a, auto const& b) {
            return a.gen_index < b.gen_index;
        });

        if (results.size() > k)
            throw Error("backend returned more results than requested");
        result_.ledger.charge(i, results.size());

        bool const was_active = state.status == QueryStatus::active;
        for (auto const& r : results)
        {
            record_generation_inplace(state, r, threshold);
            ++result_.trace.oracle_calls;
            metrics_.update(state, r);
            if (state.status == QueryStatus::eliminated && !state.eliminated_round)
            {
                state.eliminated_round = round_;
                if (was_active)
                    --n_active_;
            }
            if (options_.record_trace)
                push_row();
        }

        if (state.status == QueryStatus::active
            && (results.size() < k
                || (config_.rule != Rule::uniform && state.n_generations >= config_.max_samples)))
        {
            state.status = QueryStatus::capped;
            --n_active_;
        }
        return results.size();
    }

    void push_row()
    {
        result_.trace.rows.push_back(TraceRow{round_, result_.ledger.spent, n_active_,
                                              metrics_.coverage(), metrics_.accuracy()});
    }

    void run_elimination()
    {
        double const threshold = config_.effective_gamma();
        while (true)
        {
            if (n_active_ == 0)
            {
                finish(StopReason::all_eliminated);
                return;
            }
            if (remaining() == 0)
            {
                finish(StopReason::budget_exhausted);
                return;
            }
            ++round_;
            for (std::size_t i = 0; i < result_.states.size() && remaining() > 0; ++i)
            {
                auto const& s = result_.states[i];
                if (!is_eligible(s, config_))
                    continue;
                auto k = std::min({config_.k_per_step, remaining(), cap_room(s)});
                allocate_block(i, k, threshold);
            }
        }
    }

    void run_single_selection()
    {
        double const threshold = config_.effective_gamma();
        while (true)
        {
            if (n_active_ == 0)
            {
                finish(any_capped() ? StopReason::no_eligible_query : StopReason::all_eliminated);
                return;
            }
            if (remaining() == 0)
            {
                finish(StopReason::budget_exhausted);
                return;
            }
            ++round_;
            auto i = select_next(result_.states, config_);
            auto k = std::min({config_.k_per_step, remaining(), cap_room(result_.states[i])});
            allocate_block(i, k, threshold);
        }
    }

    // Fixed per-query quota floor(B/n) (+1 for the lowest B mod n indices),
    // handed out round-robin in K-blocks; elimination status is recorded but
    // never stops allocation.
    void run_uniform()
    {
        auto const n = static_cast<std::uint64_t>(result_.states.size());
        std::vector<std::uint64_t> quota(result_.states.size(), config_.total_budget / n);
        for (std::uint64_t i = 0; i < config_.total_budget % n; ++i)
            ++quota[i];

        double const threshold = config_.effective_gamma();
        bool progressed = true;
        while (progressed)
        {
            progressed = false;
            bool round_started = false;
            for (std::size_t i = 0; i < result_.states.size(); ++i)
            {
                if (quota[i] == 0 || result_.states[i].status == QueryStatus::capped)
                    continue;
                if (!round_started)
                {
                    ++round_;
                    round_started = true;
                }
                auto want = std::min(config_.k_per_step, quota[i]);
                auto got = allocate_block(i, want, threshold);
                quota[i] -= got;
                if (got < want)
                    quota[i] = 0;
                progressed = true;
            }
        }
        if (remaining() == 0)
            finish(StopReason::budget_exhausted);
        else
            finish(StopReason::no_eligible_query);
    }

    bool any_capped() const
    {
        return std::any_of(result_.states.begin(), result_.states.end(),
                           [](auto const& s) { return s.status == QueryStatus::capped; });
    }

    void finish(StopReason why)
    {
        result_.trace.stop = why;
        result_.trace.rounds = round_;
    }

    Backend& backend_;
    AllocConfig const& config_;
    RunOptions options_;
    MetricTracker metrics_;
    RunResult result_;
    std::size_t n_active_ = 0;
    std::uint64_t round_ = 0;
};
}  // namespace

double ucb_score(QueryState const& state, double lambda)
{
    if (state.n_generations == 0)
        return inf;
    return empirical_mean_reward(state) + lambda * inv_sqrt(state.n_generations);
}

double gap_score(QueryState const& state, double gamma)
{
    if (state.n_generations == 0)
        return -inf;
    return (gamma - empirical_mean_reward(state)) * inv_sqrt(state.n_generations);
}

double response_entropy(QueryState const& state)
{
    if (state.n_generations == 0)
        return 0.0;
    double const n = static_cast<double>(state.n_generations);
    double h = 0.0;
    for (auto const& [key, count] : state.answer_counts)
    {
        if (count == 0)
            continue;
        double p = static_cast<double>(count) / n;
        h -= p * std::log(p);
    }
    return h;
}

double entropy_score(QueryState const& state, double lambda)
{
    if (state.n_generations == 0)
        return inf;
    return response_entropy(state) + lambda * inv_sqrt(state.n_generations);
}

SelectionScore selection_score(QueryState const& state, AllocConfig const& config)
{
    SelectionScore s{state.query.index, 0.0, config.rule};
    switch (config.rule)
    {
        case Rule::ucb: s.score = ucb_score(state, config.lambda); break;
        case Rule::gap: s.score = gap_score(state, config.gamma); break;
        case Rule::entropy: s.score = entropy_score(state, config.lambda); break;
        case Rule::elimination:
        case Rule::uniform:
            throw InvalidArgument("selection_score: rule '" + std::string(to_string(config.rule))
                                  + "' does not select single queries");
    }
    return s;
}

bool is_eligible(QueryState const& state, AllocConfig const& config)
{
    return state.status == QueryStatus::active && state.n_generations < config.max_samples;
}

std::size_t select_next(std::span<QueryState const> states, AllocConfig const& config)
{
    bool const minimise = config.rule == Rule::gap;
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i)
    {
        if (!is_eligible(states[i], config))
            continue;
        double score = selection_score(states[i], config).score;
        // Strict comparison keeps the smallest index on ties.
        if (!best || (minimise ? score < best_score : score > best_score))
        {
            best = i;
            best_score = score;
        }
    }
    if (!best)
        throw NoEligibleQuery();
    return *best;
}

std::string_view to_string(StopReason reason)
{
    switch (reason)
    {
        case StopReason::budget_exhausted: return "budget_exhausted";
        case StopReason::all_eliminated: return "all_eliminated";
        case StopReason::no_eligible_query: return "no_eligible_query";
    }
    return "?";
}

RunResult run_allocation(Backend& backend, AllocConfig const& config, RunOptions options)
{
    config.validate();
    return Engine(backend, config, options).run();
}

}  // namespace ttc

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ttc/backend.hpp"
#include "ttc/types.hpp"

namespace ttc
{

class NoEligibleQuery : public Error
{
  public:
    NoEligibleQuery() : Error("no active query below max_samples") {}
};

//----------------------------------------------------------------------------
// Exploration indices
//----------------------------------------------------------------------------

/// r̂ + λ/√N; +∞ before the first generation.
double ucb_score(QueryState const& state, double lambda);

/// (γ − r̂)/√N, minimised; −∞ before the first generation.
double gap_score(QueryState const& state, double gamma);

/// Natural-log entropy of the answer histogram.
double response_entropy(QueryState const& state);

/// H + λ/√N; +∞ before the first generation.
double entropy_score(QueryState const& state, double lambda);

struct SelectionScore
{
    std::size_t query_index = 0;
    double score = 0.0;
    Rule rule = Rule::ucb;
};

/// Score of one state under a single-selection rule (ucb, gap or entropy).
SelectionScore selection_score(QueryState const& state, AllocConfig const& config);

/// True if the state may receive more generations under config.
bool is_eligible(QueryState const& state, AllocConfig const& config);

/// Argmax (ucb, entropy) or argmin (gap) of the rule's index over eligible
/// queries, ties to the smallest index. Throws NoEligibleQuery.
std::size_t select_next(std::span<QueryState const> states, AllocConfig const& config);

//----------------------------------------------------------------------------
// Allocation loop
//----------------------------------------------------------------------------

/// Snapshot taken after every applied generation. Metrics are absent when some
/// applied result carried no ground-truth correctness bit.
struct TraceRow
{
    std::uint64_t round = 0;
    std::uint64_t spent = 0;
    std::size_t active_count = 0;
    std::optional<double> coverage;
    std::optional<double> accuracy;

    friend bool operator==(TraceRow const&, TraceRow const&) = default;
};

enum class StopReason
{
    budget_exhausted,
    all_eliminated,
    no_eligible_query,  // every remaining query hit max_samples or ran out of replay data
};

std::string_view to_string(StopReason reason);

struct RunTrace
{
    Rule rule = Rule::elimination;
    std::vector<TraceRow> rows;
    std::uint64_t oracle_calls = 0;
    std::uint64_t rounds = 0;
    StopReason stop = StopReason::budget_exhausted;
};

struct RunResult
{
    RunTrace trace;
    std::vector<QueryState> states;
    BudgetLedger ledger;
};

struct RunOptions
{
    bool record_trace = true;
};

/// Runs one allocation with the configured rule against backend. The backend's
/// cursors are not reset; callers wanting a fresh sample path call reset().
RunResult run_allocation(Backend& backend, AllocConfig const& config, RunOptions options = {});

}  // namespace ttc

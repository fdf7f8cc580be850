#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ttc
{

//----------------------------------------------------------------------------
// Errors
//----------------------------------------------------------------------------

class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error
{
  public:
    using Error::Error;
};

class ConfigError : public Error
{
  public:
    using Error::Error;
};

//----------------------------------------------------------------------------
// Identifiers and results
//----------------------------------------------------------------------------

struct QueryId
{
    std::string id;
    std::size_t index = 0;

    friend bool operator==(QueryId const&, QueryId const&) = default;
};

/// Builds ids "q0".."q{n-1}" with matching indices.
std::vector<QueryId> make_query_ids(std::size_t n);

/// Throws InvalidArgument unless ids are unique and indices are exactly 0..n-1 in order.
void validate_query_ids(std::vector<QueryId> const& queries);

/// One generated response after scoring by the reward oracle.
struct GenerationResult
{
    std::string answer_key;
    double reward = 0.0;
    std::optional<bool> correct;
    std::size_t gen_index = 0;

    friend bool operator==(GenerationResult const&, GenerationResult const&) = default;
};

enum class QueryStatus
{
    active,
    eliminated,
    capped,
};

std::string_view to_string(QueryStatus status);

/// Per-query bookkeeping: the response set, its best response and histogram.
struct QueryState
{
    QueryId query;
    std::size_t n_generations = 0;
    std::vector<GenerationResult> responses;
    std::optional<double> best_reward;
    std::optional<std::size_t> best_index;
    std::map<std::string, std::size_t> answer_counts;
    double reward_sum = 0.0;
    QueryStatus status = QueryStatus::active;
    std::optional<std::size_t> eliminated_round;

    QueryState() = default;
    explicit QueryState(QueryId q) : query(std::move(q)) {}
};

/// Appends one result and applies the elimination rule (reward >= gamma).
/// The returned state is eliminated iff the result (or an earlier one) crossed gamma.
QueryState record_generation(QueryState state, GenerationResult const& result, double gamma);

/// In-place form used by the allocation loop.
void record_generation_inplace(QueryState& state, GenerationResult const& result, double gamma);

/// Mean reward over the response set; requires n_generations >= 1.
double empirical_mean_reward(QueryState const& state);

//----------------------------------------------------------------------------
// Budget and configuration
//----------------------------------------------------------------------------

struct BudgetLedger
{
    std::uint64_t total = 0;
    std::uint64_t spent = 0;
    std::vector<std::uint64_t> per_query;  // c(x), indexed by QueryId::index

    std::uint64_t remaining() const { return total - spent; }
    void charge(std::size_t query_index, std::uint64_t amount);
};

enum class Rule
{
    elimination,
    ucb,
    gap,
    entropy,
    uniform,
};

std::string_view to_string(Rule rule);
Rule parse_rule(std::string_view name);

enum class ReplayExhaustedPolicy
{
    error,
    cap,
};

std::string_view to_string(ReplayExhaustedPolicy policy);
ReplayExhaustedPolicy parse_replay_policy(std::string_view name);

inline constexpr std::uint64_t unbounded = std::numeric_limits<std::uint64_t>::max();

struct AllocConfig
{
    Rule rule = Rule::elimination;
    std::uint64_t total_budget = 0;
    std::uint64_t k_per_step = 1;
    double gamma = 1.0;
    double lambda = 1.0;
    double gamma_slack = 0.0;
    std::uint64_t max_samples = unbounded;
    std::uint64_t seed = 0;
    ReplayExhaustedPolicy on_replay_exhausted = ReplayExhaustedPolicy::error;

    /// Threshold actually applied by the elimination rule.
    double effective_gamma() const { return gamma - gamma_slack; }

    void validate() const;
};

/// Default lambda per rule: 1 for UCB, 3 for Entropy, unused elsewhere.
double default_lambda(Rule rule);

}  // namespace ttc

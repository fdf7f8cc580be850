#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ttc/types.hpp"

namespace ttc
{

/// Raised by the replay backend when a stream cannot satisfy a request under
/// ReplayExhaustedPolicy::error.
class ReplayExhausted : public Error
{
  public:
    ReplayExhausted(std::string query_id, std::size_t requested, std::size_t available);

    std::string const& query_id() const noexcept { return query_id_; }
    std::size_t requested() const noexcept { return requested_; }
    std::size_t available() const noexcept { return available_; }

  private:
    std::string query_id_;
    std::size_t requested_;
    std::size_t available_;
};

/// Source of scored generations.
///
/// Backends keep a cursor per query. generate_batch may be called concurrently
/// for distinct queries; calls for the same query must be serialised.
class Backend
{
  public:
    virtual ~Backend() = default;

    /// Produces up to k results for the query, in gen_index order. A result
    /// shorter than k means the query's source is exhausted (only possible under
    /// ReplayExhaustedPolicy::cap).
    virtual std::vector<GenerationResult>
    generate_batch(QueryId const& query, std::size_t k, ReplayExhaustedPolicy policy) = 0;

    /// Rewinds every cursor so the next run sees the same sample paths.
    virtual void reset() = 0;

    virtual std::vector<QueryId> const& queries() const = 0;
};

//----------------------------------------------------------------------------
// Synthetic Bernoulli model
//----------------------------------------------------------------------------

inline constexpr std::string_view correct_key = "CORRECT";
inline constexpr std::string_view invalid_key = "INVALID";

/// Per-query parameters of the Bernoulli success model and its failure-answer law.
struct SyntheticQuery
{
    double delta = 0.0;           // per-generation success probability
    double invalid_prob = 0.0;    // P(answer = INVALID | failure)
    std::size_t wrong_vocab = 1;  // W distinct wrong answers WRONG_1..WRONG_W
    double wrong_skew = 0.0;      // Zipf exponent over wrong answers
};

struct SyntheticInstance
{
    std::vector<QueryId> queries;
    std::vector<SyntheticQuery> params;  // parallel to queries

    /// All queries share the failure model, one query per delta.
    static SyntheticInstance from_deltas(std::vector<double> const& deltas,
                                         double invalid_prob = 0.0,
                                         std::size_t wrong_vocab = 1,
                                         double wrong_skew = 0.0);

    void validate() const;
};

/// Draws generation gen_index of query query_index from the counter-based
/// substream (seed, query_index). Pure; shared by the backend and test oracles.
GenerationResult synthetic_draw(SyntheticQuery const& params,
                                std::uint64_t seed,
                                std::size_t query_index,
                                std::size_t gen_index);

class SyntheticBackend final : public Backend
{
  public:
    SyntheticBackend(SyntheticInstance instance, std::uint64_t seed);

    std::vector<GenerationResult>
    generate_batch(QueryId const& query, std::size_t k, ReplayExhaustedPolicy policy) override;
    void reset() override;
    std::vector<QueryId> const& queries() const override { return instance_.queries; }

    SyntheticInstance const& instance() const noexcept { return instance_; }
    std::uint64_t seed() const noexcept { return seed_; }

  private:
    SyntheticInstance instance_;
    std::uint64_t seed_;
    std::vector<std::size_t> cursor_;
};

//----------------------------------------------------------------------------
// Replay of logged, pre-scored generations
//----------------------------------------------------------------------------

struct ReplayLog
{
    std::vector<QueryId> queries;  // first-appearance order
    std::vector<std::vector<GenerationResult>> streams;  // parallel to queries

    /// Parses JSON Lines records
    /// {"query_id": str, "gen_index": int, "answer_key": str, "reward": float, "correct": bool?}.
    static ReplayLog parse(std::istream& in);
    static ReplayLog load(std::filesystem::path const& path);
};

class ReplayBackend final : public Backend
{
  public:
    explicit ReplayBackend(ReplayLog log);

    std::vector<GenerationResult>
    generate_batch(QueryId const& query, std::size_t k, ReplayExhaustedPolicy policy) override;
    void reset() override;
    std::vector<QueryId> const& queries() const override { return log_.queries; }

    ReplayLog const& log() const noexcept { return log_; }
    std::size_t cursor(std::size_t query_index) const { return cursor_.at(query_index); }

  private:
    ReplayLog log_;
    std::vector<std::size_t> cursor_;
};

}  // namespace ttc

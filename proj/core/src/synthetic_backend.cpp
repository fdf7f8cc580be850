#include <cmath>
#include <string>

#include "ttc/backend.hpp"
#include "ttc/rng.hpp"

namespace ttc
{
namespace
{
// Draw slots per generation within a query's substream.
constexpr std::uint64_t slot_success = 0;
constexpr std::uint64_t slot_invalid = 1;
constexpr std::uint64_t slot_wrong = 2;
constexpr std::uint64_t slots_per_generation = 3;

// Inverse-CDF sample of j in 1..W with P(j) proportional to j^-s.
std::size_t zipf_rank(double u, std::size_t vocab, double skew)
{
    double norm = 0.0;
    for (std::size_t j = 1; j <= vocab; ++j)
        norm += std::pow(static_cast<double>(j), -skew);
    double const target = u * norm;
    double acc = 0.0;
    for (std::size_t j = 1; j <= vocab; ++j)
    {
        acc += std::pow(static_cast<double>(j), -skew);
        if (target < acc)
            return j;
    }
    return vocab;
}
}  // namespace

SyntheticInstance SyntheticInstance::from_deltas(std::vector<double> const& deltas,
                                                 double invalid_prob,
                                                 std::size_t wrong_vocab,
                                                 double wrong_skew)
{
    SyntheticInstance inst;
    inst.queries = make_query_ids(deltas.size());
    inst.params.reserve(deltas.size());
    for (double d : deltas)
        inst.params.push_back(SyntheticQuery{d, invalid_prob, wrong_vocab, wrong_skew});
    return inst;
}

void SyntheticInstance::validate() const
{
    if (queries.size() != params.size())
        throw InvalidArgument("synthetic instance: query and parameter counts differ");
    validate_query_ids(queries);
    for (std::size_t i = 0; i < params.size(); ++i)
    {
        auto const& p = params[i];
        auto where = "synthetic query '" + queries[i].id + "': ";
        if (!(p.delta >= 0.0 && p.delta <= 1.0))
            throw InvalidArgument(where + "delta must lie in [0, 1]");
        if (!(p.invalid_prob >= 0.0 && p.invalid_prob <= 1.0))
            throw InvalidArgument(where + "invalid_prob must lie in [0, 1]");
        if (p.wrong_vocab == 0)
            throw InvalidArgument(where + "wrong-answer vocabulary must be positive");
        if (!(p.wrong_skew >= 0.0))
            throw InvalidArgument(where + "wrong-answer skew must be nonnegative");
    }
}

GenerationResult synthetic_draw(SyntheticQuery const& params,
                                std::uint64_t seed,
                                std::size_t query_index,
                                std::size_t gen_index)
{
    auto const key = rng::substream_key(seed, query_index);
    auto const base = static_cast<std::uint64_t>(gen_index) * slots_per_generation;

    GenerationResult out;
    out.gen_index = gen_index;
    if (rng::draw_unit(key, base + slot_success) < params.delta)
    {
        out.answer_key = std::string(correct_key);
        out.reward = 1.0;
        out.correct = true;
        return out;
    }
    out.reward = 0.0;
    out.correct = false;
    if (rng::draw_unit(key, base + slot_invalid) < params.invalid_prob)
    {
        out.answer_key = std::string(invalid_key);
    }
    else
    {
        auto j = zipf_rank(rng::draw_unit(key, base + slot_wrong), params.wrong_vocab,
                           params.wrong_skew);
        out.answer_key = "WRONG_" + std::to_string(j);
    }
    return out;
}

SyntheticBackend::SyntheticBackend(SyntheticInstance instance, std::uint64_t seed)
    : instance_(std::move(instance)), seed_(seed), cursor_(instance_.queries.size(), 0)
{
    instance_.validate();
}

std::vector<GenerationResult>
SyntheticBackend::generate_batch(QueryId const& query, std::size_t k, ReplayExhaustedPolicy)
{
    if (k == 0)
        throw InvalidArgument("generate_batch: k must be positive");
    if (query.index >= instance_.queries.size())
        throw InvalidArgument("generate_batch: unknown query '" + query.id + "'");

    auto& cursor = cursor_[query.index];
    std::vector<GenerationResult> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        out.push_back(synthetic_draw(instance_.params[query.index], seed_, query.index, cursor++));
    return out;
}

void SyntheticBackend::reset()
{
    std::fill(cursor_.begin(), cursor_.end(), 0);
}

}  // namespace ttc

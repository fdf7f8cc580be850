#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "ttc/backend.hpp"

namespace ttc
{

ReplayExhausted::ReplayExhausted(std::string query_id, std::size_t requested, std::size_t available)
    : Error("replay log exhausted for query '" + query_id + "': requested "
            + std::to_string(requested) + ", " + std::to_string(available) + " remaining")
    , query_id_(std::move(query_id))
    , requested_(requested)
    , available_(available)
{
}

ReplayLog ReplayLog::parse(std::istream& in)
{
    using nlohmann::json;

    ReplayLog log;
    std::unordered_map<std::string, std::size_t> index_of;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto where = "replay line " + std::to_string(lineno) + ": ";

        json rec;
        try
        {
            rec = json::parse(line);
        }
        catch (json::parse_error const& e)
        {
            throw InvalidArgument(where + "malformed JSON (" + e.what() + ")");
        }
        if (!rec.is_object())
            throw InvalidArgument(where + "expected a JSON object");

        auto require = [&](char const* key, auto check, char const* what) -> json const& {
            auto it = rec.find(key);
            if (it == rec.end())
                throw InvalidArgument(where + "missing field '" + key + "'");
            if (!check(*it))
                throw InvalidArgument(where + "field '" + key + "' must be " + what);
            return *it;
        };

        auto const& qid = require("query_id", [](json const& j) { return j.is_string(); }, "a string");
        auto const& gidx = require("gen_index",
                                   [](json const& j) { return j.is_number_unsigned(); },
                                   "a nonnegative integer");
        auto const& key = require("answer_key", [](json const& j) { return j.is_string(); }, "a string");
        auto const& reward = require("reward", [](json const& j) { return j.is_number(); }, "a number");

        GenerationResult r;
        r.answer_key = key.get<std::string>();
        r.reward = reward.get<double>();
        r.gen_index = gidx.get<std::size_t>();
        if (auto it = rec.find("correct"); it != rec.end() && !it->is_null())
        {
            if (!it->is_boolean())
                throw InvalidArgument(where + "field 'correct' must be a boolean or null");
            r.correct = it->get<bool>();
        }
        if (!(r.reward >= 0.0 && r.reward <= 1.0))
            throw InvalidArgument(where + "reward must lie in [0, 1]");

        auto id = qid.get<std::string>();
        auto [it, inserted] = index_of.try_emplace(id, log.queries.size());
        if (inserted)
        {
            log.queries.push_back(QueryId{id, log.queries.size()});
            log.streams.emplace_back();
        }
        auto& stream = log.streams[it->second];
        if (r.gen_index != stream.size())
            throw InvalidArgument(where + "query '" + id + "' expected gen_index "
                                  + std::to_string(stream.size()) + ", got "
                                  + std::to_string(r.gen_index));
        stream.push_back(std::move(r));
    }
    return log;
}

ReplayLog ReplayLog::load(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open replay log '" + path.string() + "'");
    return parse(in);
}

ReplayBackend::ReplayBackend(ReplayLog log) : log_(std::move(log)), cursor_(log_.queries.size(), 0)
{
    validate_query_ids(log_.queries);
}

std::vector<GenerationResult>
ReplayBackend::generate_batch(QueryId const& query, std::size_t k, ReplayExhaustedPolicy policy)
{
    if (k == 0)
        throw InvalidArgument("generate_batch: k must be positive");
    if (query.index >= log_.queries.size() || log_.queries[query.index].id != query.id)
        throw InvalidArgument("generate_batch: unknown query '" + query.id + "'");

    auto const& stream = log_.streams[query.index];
    auto& cursor = cursor_[query.index];
    std::size_t const available = stream.size() - cursor;
    if (available < k && policy == ReplayExhaustedPolicy::error)
        throw ReplayExhausted(query.id, k, available);

    std::size_t const take = std::min(k, available);
    std::vector<GenerationResult> out(stream.begin() + static_cast<std::ptrdiff_t>(cursor),
                                      stream.begin() + static_cast<std::ptrdiff_t>(cursor + take));
    cursor += take;
    return out;
}

void ReplayBackend::reset()
{
    std::fill(cursor_.begin(), cursor_.end(), 0);
}

}  // namespace ttc

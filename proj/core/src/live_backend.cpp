#include "ttc/live_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace ttc
{
namespace
{
struct SplitUrl
{
    std::string scheme_host_port;
    std::string path_prefix;
};

SplitUrl split_base(std::string const& base)
{
    auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("TTC_API_BASE: expected scheme://host[:port][/path], got '" + base + "'");
    auto path_start = base.find('/', scheme_end + 3);
    SplitUrl out;
    out.scheme_host_port = base.substr(0, path_start);
    out.path_prefix = path_start == std::string::npos ? std::string{} : base.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
        out.path_prefix.pop_back();
    return out;
}

std::optional<std::chrono::seconds> parse_retry_after(std::string const& value)
{
    if (value.empty())
        return std::nullopt;
    char* end = nullptr;
    long secs = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || secs < 0)
        return std::nullopt;
    return std::chrono::seconds{secs};
}

std::string env_or_empty(char const* name)
{
    char const* v = std::getenv(name);
    return v ? std::string(v) : std::string{};
}
}  // namespace

LiveError::LiveError(std::string what, int http_status, bool retriable,
                     std::optional<std::chrono::seconds> retry_after)
    : Error(std::move(what)), http_status_(http_status), retriable_(retriable), retry_after_(retry_after)
{
}

LiveEndpoint LiveEndpoint::from_env()
{
    LiveEndpoint ep{env_or_empty("TTC_API_BASE"), env_or_empty("TTC_API_KEY"),
                    env_or_empty("TTC_MODEL")};
    if (ep.api_base.empty())
        throw ConfigError("TTC_API_BASE is not set");
    if (ep.model.empty())
        throw ConfigError("TTC_MODEL is not set");
    return ep;
}

LiveClient::LiveClient(LiveEndpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(std::move(retry))
{
    split_base(endpoint_.api_base);
    if (retry_.max_attempts < 1)
        throw ConfigError("retry: max_attempts must be at least 1");
    if (!retry_.sleep)
        retry_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::vector<std::string> LiveClient::request_once(std::string const& query_text, std::size_t n,
                                                  DecodingParams const& params) const
{
    using nlohmann::json;

    json body = {
        {"model", endpoint_.model},
        {"messages", json::array({json{{"role", "user"}, {"content", query_text}}})},
        {"temperature", params.temperature},
        {"n", n},
    };
    if (params.top_p)
        body["top_p"] = *params.top_p;
    if (params.max_tokens)
        body["max_tokens"] = *params.max_tokens;

    auto url = split_base(endpoint_.api_base);
    httplib::Client cli(url.scheme_host_port);
    cli.set_connection_timeout(10);
    cli.set_read_timeout(300);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

    auto res = cli.Post(url.path_prefix + "/chat/completions", headers, body.dump(),
                        "application/json");
    if (!res)
        throw LiveError("transport error contacting " + endpoint_.api_base + ": "
                            + httplib::to_string(res.error()),
                        0, true);

    int const status = res->status;
    if (status == 429 || status >= 500)
        throw LiveError("server returned HTTP " + std::to_string(status), status, true,
                        parse_retry_after(res->get_header_value("Retry-After")));
    if (status == 401 || status == 403)
        throw LiveError("authentication rejected (HTTP " + std::to_string(status) + ")", status,
                        false);
    if (status != 200)
        throw LiveError("unexpected HTTP " + std::to_string(status), status, false);

    std::vector<std::string> out;
    try
    {
        auto reply = json::parse(res->body);
        for (auto const& choice : reply.at("choices"))
            out.push_back(choice.at("message").at("content").get<std::string>());
    }
    catch (json::exception const& e)
    {
        throw LiveError(std::string("malformed completion response: ") + e.what(), status, false);
    }
    return out;
}

std::vector<std::string> LiveClient::complete(std::string const& query_text, std::size_t k,
                                              DecodingParams const& params) const
{
    std::vector<std::string> out;
    out.reserve(k);
    while (out.size() < k)
    {
        std::vector<std::string> got;
        for (int attempt = 1;; ++attempt)
        {
            try
            {
                got = request_once(query_text, k - out.size(), params);
                break;
            }
            catch (LiveError const& e)
            {
                if (!e.retriable() || attempt >= retry_.max_attempts)
                    throw;
                auto delay = e.retry_after()
                                 ? std::chrono::duration_cast<std::chrono::milliseconds>(*e.retry_after())
                                 : retry_.fallback_delay;
                retry_.sleep(delay);
            }
        }
        if (got.empty())
            throw LiveError("server returned no completions", 200, false);
        for (auto& text : got)
        {
            if (out.size() == k)
                break;
            out.push_back(std::move(text));
        }
    }
    return out;
}

std::vector<std::string> live_generate(LiveEndpoint const& endpoint,
                                       std::string const& query_text,
                                       std::size_t k,
                                       DecodingParams const& params)
{
    return LiveClient(endpoint).complete(query_text, k, params);
}

LiveBackend::LiveBackend(LiveClient client, std::vector<QueryId> queries,
                         std::vector<std::string> query_texts, ScoringHook score,
                         DecodingParams params)
    : client_(std::move(client))
    , queries_(std::move(queries))
    , texts_(std::move(query_texts))
    , score_(std::move(score))
    , params_(params)
    , cursor_(queries_.size(), 0)
{
    if (!score_)
        throw ConfigError("live backend: a scoring hook is required to turn completions into rewards");
    if (texts_.size() != queries_.size())
        throw ConfigError("live backend: query text count does not match query count");
    validate_query_ids(queries_);
}

std::vector<GenerationResult>
LiveBackend::generate_batch(QueryId const& query, std::size_t k, ReplayExhaustedPolicy)
{
    if (k == 0)
        throw InvalidArgument("generate_batch: k must be positive");
    if (query.index >= queries_.size())
        throw InvalidArgument("generate_batch: unknown query '" + query.id + "'");

    // Network call first so a failure leaves the cursor untouched.
    auto completions = client_.complete(texts_[query.index], k, params_);
    std::vector<GenerationResult> out;
    out.reserve(completions.size());
    std::size_t gen = cursor_[query.index];
    for (auto const& text : completions)
    {
        auto r = score_(query, text, gen);
        r.gen_index = gen++;
        out.push_back(std::move(r));
    }
    cursor_[query.index] = gen;
    return out;
}

void LiveBackend::reset()
{
    std::fill(cursor_.begin(), cursor_.end(), 0);
}

}  // namespace ttc

#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ttc/backend.hpp"

namespace ttc
{

/// Failure talking to a completion server. retriable() is true for rate
/// limiting, server errors and transport failures; retry_after() carries the
/// server's Retry-After hint when it sent one.
class LiveError : public Error
{
  public:
    LiveError(std::string what, int http_status, bool retriable,
              std::optional<std::chrono::seconds> retry_after = std::nullopt);

    int http_status() const noexcept { return http_status_; }  // 0 for transport errors
    bool retriable() const noexcept { return retriable_; }
    std::optional<std::chrono::seconds> retry_after() const noexcept { return retry_after_; }

  private:
    int http_status_;
    bool retriable_;
    std::optional<std::chrono::seconds> retry_after_;
};

struct LiveEndpoint
{
    std::string api_base;  // e.g. http://localhost:8000/v1
    std::string api_key;
    std::string model;

    /// Reads TTC_API_BASE, TTC_API_KEY and TTC_MODEL; throws ConfigError if base or model is unset.
    static LiveEndpoint from_env();
};

struct DecodingParams
{
    double temperature = 0.6;
    std::optional<double> top_p;
    std::optional<int> max_tokens;
};

struct RetryPolicy
{
    int max_attempts = 1;
    std::chrono::milliseconds fallback_delay{1000};
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to std::this_thread::sleep_for
};

/// Minimal chat-completions client for OpenAI-compatible servers.
class LiveClient
{
  public:
    explicit LiveClient(LiveEndpoint endpoint, RetryPolicy retry = {});

    /// Requests k completions for one user message, asking for n=k per request
    /// and topping up if the server returns fewer. Completions are returned in
    /// server order.
    std::vector<std::string> complete(std::string const& query_text, std::size_t k,
                                      DecodingParams const& params = {}) const;

    LiveEndpoint const& endpoint() const noexcept { return endpoint_; }

  private:
    std::vector<std::string> request_once(std::string const& query_text, std::size_t n,
                                          DecodingParams const& params) const;

    LiveEndpoint endpoint_;
    RetryPolicy retry_;
};

/// Free-function form of LiveClient::complete.
std::vector<std::string> live_generate(LiveEndpoint const& endpoint,
                                       std::string const& query_text,
                                       std::size_t k,
                                       DecodingParams const& params = {});

/// Converts a raw completion into a scored result; supplied by the caller.
using ScoringHook = std::function<GenerationResult(
    QueryId const& query, std::string const& completion, std::size_t gen_index)>;

class LiveBackend final : public Backend
{
  public:
    /// query_texts is parallel to queries. Throws ConfigError if score is empty.
    LiveBackend(LiveClient client, std::vector<QueryId> queries,
                std::vector<std::string> query_texts, ScoringHook score,
                DecodingParams params = {});

    std::vector<GenerationResult>
    generate_batch(QueryId const& query, std::size_t k, ReplayExhaustedPolicy policy) override;
    void reset() override;
    std::vector<QueryId> const& queries() const override { return queries_; }

  private:
    LiveClient client_;
    std::vector<QueryId> queries_;
    std::vector<std::string> texts_;
    ScoringHook score_;
    DecodingParams params_;
    std::vector<std::size_t> cursor_;
};

}  // namespace ttc

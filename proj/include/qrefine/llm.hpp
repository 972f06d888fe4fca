#pragma once

#include "qrefine/money.hpp"
#include "qrefine/usage.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrefine {

struct ChatMessage {
    std::string role; // system | user | assistant
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages; // nonempty; first role is system or user
    double temperature = 0.0;
    int max_output_tokens = 2048;
};

struct ChatResponse {
    std::string content;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

// --- error taxonomy ---

struct LlmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Authentication/authorization failure; never retried.
struct AuthError : LlmError {
    using LlmError::LlmError;
};

// Reply that cannot be interpreted (bad JSON shape, missing fixture, ...).
struct MalformedResponse : LlmError {
    using LlmError::LlmError;
};

// Internal signal for HTTP 429/5xx/timeouts; retried with backoff.
struct TransientError : LlmError {
    TransientError(int status, const std::string& what) : LlmError(what), status(status) {}
    int status;
};

// Raised once the retry budget is exhausted.
struct TransportError : LlmError {
    using LlmError::LlmError;
};

struct UnknownModel : LlmError {
    using LlmError::LlmError;
};

// Stable identity of a request over (model, messages, temperature);
// 16 hex digits of FNV-1a 64. Fixture files are keyed by this.
std::string request_hash(const ChatRequest& request);

class Transport {
public:
    virtual ~Transport() = default;
    virtual ChatResponse send(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

/**
 * Live OpenAI-compatible chat-completions endpoint. base_url carries the
 * scheme, host, and any path prefix ("https://api.example.com/v1").
 * Construction is counted so the test suite can prove it ran offline.
 */
class HttpTransport : public Transport {
public:
    HttpTransport(std::string base_url, std::string api_key);
    ChatResponse send(const ChatRequest& request) override;
    std::string name() const override { return "live"; }

    static std::int64_t instances_created();

private:
    std::string base_url_;
    std::string api_key_;
};

/**
 * Deterministic replay transport: request hash -> recorded response.
 * Unregistered requests raise MalformedResponse naming the missing hash.
 */
class FixtureTransport : public Transport {
public:
    FixtureTransport() = default;

    // Loads every *.json file in the directory:
    // {"request_hash": "...", "response": {"content", "input_tokens", "output_tokens"}}
    static FixtureTransport from_directory(const std::string& dir);

    void add(const ChatRequest& request, ChatResponse response);
    void add(const std::string& hash, ChatResponse response);
    std::size_t size() const { return fixtures_.size(); }

    ChatResponse send(const ChatRequest& request) override;
    std::string name() const override { return "fixtures"; }

private:
    std::map<std::string, ChatResponse> fixtures_;
};

// Writes the fixture file for one (request, response) pair; returns the hash.
std::string write_fixture(const std::string& dir, const ChatRequest& request,
                          const ChatResponse& response);

// --- cost model ---

/**
 * Price table: model name -> USD per 1,000,000 tokens, optionally split
 * into input/output rates. Prices are stored in micro-USD per million,
 * which is exactly picodollars per token, so accrual is exact.
 */
class CostModel {
public:
    void set_price(const std::string& model, Money per_million);
    void set_split_price(const std::string& model, Money input_per_million,
                         Money output_per_million);
    bool has(const std::string& model) const { return prices_.count(model) > 0; }
    std::vector<std::string> models() const;

    // Built-in table: gpt-4.1-nano at $0.10/1M, gpt-o3-mini at $1.10/1M.
    static CostModel defaults();

    friend Money accrue_cost(std::int64_t input_tokens, std::int64_t output_tokens,
                             const std::string& model, const CostModel& costs);

private:
    struct Price {
        std::int64_t input_pico_per_token = 0;
        std::int64_t output_pico_per_token = 0;
    };
    std::map<std::string, Price> prices_;
};

// (input + output) tokens x per-token price, exact. Throws UnknownModel.
Money accrue_cost(std::int64_t input_tokens, std::int64_t output_tokens, const std::string& model,
                  const CostModel& costs);

// --- admission control ---

/**
 * Token bucket over a monotonic clock; capacity is one minute's worth of
 * requests. The clock is injectable so refill arithmetic is testable.
 */
class TokenBucket {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    explicit TokenBucket(double per_minute, Clock now = nullptr);

    bool try_acquire();
    std::chrono::milliseconds time_until_available();

private:
    void refill();

    double per_minute_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    Clock now_;
    std::mutex mutex_;
};

// --- gateway ---

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{1000}; // 1s, then 2s, 4s, ...
    double multiplier = 2.0;
    // Full jitter: each delay is uniform in [0, base * multiplier^k).
    std::function<double()> jitter;                              // default: seeded uniform
    std::function<void(std::chrono::milliseconds)> sleeper;      // default: real sleep
};

/**
 * The single boundary through which agents talk to a model: retries
 * transient failures with exponential backoff and full jitter, enforces
 * the rate limit, and accounts tokens and cost per call. Safe for
 * concurrent use.
 */
class Gateway {
public:
    struct CallRecord {
        std::string model;
        std::string hash;
        std::int64_t input_tokens = 0;
        std::int64_t output_tokens = 0;
        int attempts = 1;
        Money cost;
    };

    Gateway(std::shared_ptr<Transport> transport, CostModel costs, RetryPolicy retry = {});

    void set_rate_limit_per_minute(double per_minute);

    ChatResponse complete(const ChatRequest& request);

    std::vector<CallRecord> calls() const;
    int last_attempts() const;
    Money total_cost() const;
    Transport& transport() { return *transport_; }

private:
    std::shared_ptr<Transport> transport_;
    CostModel costs_;
    RetryPolicy retry_;
    std::unique_ptr<TokenBucket> bucket_;
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
    Money total_;
    int last_attempts_ = 0;
};

} // namespace qrefine

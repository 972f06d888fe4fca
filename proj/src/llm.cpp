#include "qrefine/llm.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace qrefine {

namespace {

std::atomic<std::int64_t> g_http_transports_created{0};

void fnv_bytes(std::uint64_t& h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
}

} // namespace

std::string request_hash(const ChatRequest& request) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    fnv_bytes(h, request.model);
    fnv_bytes(h, "\x1f");
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6f", request.temperature);
    fnv_bytes(h, temp);
    fnv_bytes(h, "\x1f");
    for (const ChatMessage& m : request.messages) {
        fnv_bytes(h, m.role);
        fnv_bytes(h, "\x1e");
        fnv_bytes(h, m.content);
        fnv_bytes(h, "\x1d");
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

// --- HttpTransport ---

HttpTransport::HttpTransport(std::string base_url, std::string api_key)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {
    if (api_key_.empty())
        throw AuthError("no API key configured for the live transport");
    g_http_transports_created.fetch_add(1);
}

std::int64_t HttpTransport::instances_created() { return g_http_transports_created.load(); }

ChatResponse HttpTransport::send(const ChatRequest& request) {
    // split scheme://host[:port] from any path prefix
    std::string origin = base_url_;
    std::string prefix;
    std::size_t scheme = origin.find("://");
    std::size_t path = origin.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path != std::string::npos) {
        prefix = origin.substr(path);
        origin = origin.substr(0, path);
        if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    }

    nlohmann::json messages = nlohmann::json::array();
    for (const ChatMessage& m : request.messages)
        messages.push_back({{"role", m.role}, {"content", m.content}});
    nlohmann::json body{
        {"model", request.model},
        {"messages", std::move(messages)},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
    };

    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    auto result = client.Post(prefix + "/chat/completions", headers, body.dump(),
                              "application/json");
    if (!result)
        throw TransientError(0, "connection to " + origin + " failed: " +
                                    httplib::to_string(result.error()));
    if (result->status == 401 || result->status == 403)
        throw AuthError("authentication rejected (HTTP " + std::to_string(result->status) + ")");
    if (result->status == 429 || result->status >= 500)
        throw TransientError(result->status,
                             "transient HTTP " + std::to_string(result->status));
    if (result->status != 200)
        throw MalformedResponse("unexpected HTTP " + std::to_string(result->status) + ": " +
                                result->body);
    try {
        nlohmann::json j = nlohmann::json::parse(result->body);
        ChatResponse response;
        response.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
            response.input_tokens = j["usage"].value("prompt_tokens", 0);
            response.output_tokens = j["usage"].value("completion_tokens", 0);
        }
        return response;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedResponse(std::string("cannot parse chat completion reply: ") + e.what());
    }
}

// --- FixtureTransport ---

FixtureTransport FixtureTransport::from_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    FixtureTransport transport;
    if (!fs::is_directory(dir))
        throw MalformedResponse("fixture directory does not exist: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
        std::ifstream in(file);
        nlohmann::json j = nlohmann::json::parse(in);
        ChatResponse response;
        const auto& r = j.at("response");
        response.content = r.at("content").get<std::string>();
        response.input_tokens = r.value("input_tokens", 0);
        response.output_tokens = r.value("output_tokens", 0);
        transport.add(j.at("request_hash").get<std::string>(), std::move(response));
    }
    return transport;
}

void FixtureTransport::add(const ChatRequest& request, ChatResponse response) {
    add(request_hash(request), std::move(response));
}

void FixtureTransport::add(const std::string& hash, ChatResponse response) {
    fixtures_[hash] = std::move(response);
}

ChatResponse FixtureTransport::send(const ChatRequest& request) {
    std::string hash = request_hash(request);
    auto it = fixtures_.find(hash);
    if (it == fixtures_.end())
        throw MalformedResponse("no fixture registered for request hash " + hash + " (model " +
                                request.model + ", " + std::to_string(request.messages.size()) +
                                " messages)");
    return it->second;
}

std::string write_fixture(const std::string& dir, const ChatRequest& request,
                          const ChatResponse& response) {
    std::filesystem::create_directories(dir);
    std::string hash = request_hash(request);
    nlohmann::json j{
        {"request_hash", hash},
        {"response",
         {{"content", response.content},
          {"input_tokens", response.input_tokens},
          {"output_tokens", response.output_tokens}}},
    };
    std::ofstream out(std::filesystem::path(dir) / (hash + ".json"));
    out << j.dump(2) << "\n";
    return hash;
}

// --- CostModel ---

namespace {

std::int64_t price_to_pico_per_token(Money per_million) {
    // USD per 1M tokens in picodollars, divided by 1M tokens: must land on
    // whole picodollars per token (i.e. price is a whole number of
    // micro-USD per million).
    if (per_million.pico() % 1'000'000 != 0)
        throw UnknownModel("price must be a multiple of USD 0.000001 per million tokens");
    return per_million.pico() / 1'000'000;
}

} // namespace

void CostModel::set_price(const std::string& model, Money per_million) {
    std::int64_t per_token = price_to_pico_per_token(per_million);
    prices_[model] = Price{per_token, per_token};
}

void CostModel::set_split_price(const std::string& model, Money input_per_million,
                                Money output_per_million) {
    prices_[model] = Price{price_to_pico_per_token(input_per_million),
                           price_to_pico_per_token(output_per_million)};
}

std::vector<std::string> CostModel::models() const {
    std::vector<std::string> names;
    for (const auto& [name, _] : prices_) names.push_back(name);
    return names;
}

CostModel CostModel::defaults() {
    CostModel model;
    model.set_price("gpt-4.1-nano", Money::parse("0.10"));
    model.set_price("gpt-o3-mini", Money::parse("1.10"));
    return model;
}

Money accrue_cost(std::int64_t input_tokens, std::int64_t output_tokens, const std::string& model,
                  const CostModel& costs) {
    auto it = costs.prices_.find(model);
    if (it == costs.prices_.end()) throw UnknownModel("no price entry for model '" + model + "'");
    return Money::from_pico(input_tokens * it->second.input_pico_per_token +
                            output_tokens * it->second.output_pico_per_token);
}

// --- TokenBucket ---

TokenBucket::TokenBucket(double per_minute, Clock now)
    : per_minute_(per_minute), tokens_(per_minute),
      now_(now ? std::move(now) : [] { return std::chrono::steady_clock::now(); }) {
    last_ = now_();
}

void TokenBucket::refill() {
    auto current = now_();
    double minutes = std::chrono::duration<double>(current - last_).count() / 60.0;
    last_ = current;
    tokens_ = std::min(per_minute_, tokens_ + minutes * per_minute_);
}

bool TokenBucket::try_acquire() {
    std::lock_guard lock(mutex_);
    refill();
    if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return true;
    }
    return false;
}

std::chrono::milliseconds TokenBucket::time_until_available() {
    std::lock_guard lock(mutex_);
    refill();
    if (tokens_ >= 1.0) return std::chrono::milliseconds(0);
    double deficit = 1.0 - tokens_;
    double seconds = deficit * 60.0 / per_minute_;
    return std::chrono::milliseconds(static_cast<std::int64_t>(seconds * 1000.0) + 1);
}

// --- Gateway ---

Gateway::Gateway(std::shared_ptr<Transport> transport, CostModel costs, RetryPolicy retry)
    : transport_(std::move(transport)), costs_(std::move(costs)), retry_(std::move(retry)) {
    if (!retry_.jitter) {
        auto rng = std::make_shared<std::mt19937_64>(0x5EED);
        retry_.jitter = [rng]() {
            return std::uniform_real_distribution<double>(0.0, 1.0)(*rng);
        };
    }
    if (!retry_.sleeper)
        retry_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

void Gateway::set_rate_limit_per_minute(double per_minute) {
    if (per_minute > 0) bucket_ = std::make_unique<TokenBucket>(per_minute);
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    if (request.messages.empty())
        throw MalformedResponse("chat request must carry at least one message");
    const std::string& first = request.messages.front().role;
    if (first != "system" && first != "user")
        throw MalformedResponse("first message role must be system or user, got '" + first + "'");

    std::string last_error;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        if (bucket_)
            while (!bucket_->try_acquire()) retry_.sleeper(bucket_->time_until_available());
        try {
            ChatResponse response = transport_->send(request);
            Money cost;
            if (costs_.has(request.model))
                cost = accrue_cost(response.input_tokens, response.output_tokens, request.model,
                                   costs_);
            {
                std::lock_guard lock(mutex_);
                records_.push_back(CallRecord{request.model, request_hash(request),
                                              response.input_tokens, response.output_tokens,
                                              attempt, cost});
                total_ += cost;
                last_attempts_ = attempt;
            }
            return response;
        } catch (const TransientError& e) {
            last_error = e.what();
            if (attempt == retry_.max_attempts) break;
            double scale = 1.0;
            for (int k = 1; k < attempt; ++k) scale *= retry_.multiplier;
            auto ceiling = std::chrono::duration<double, std::milli>(retry_.base_delay) * scale;
            auto delay = std::chrono::duration_cast<std::chrono::milliseconds>(
                ceiling * retry_.jitter());
            retry_.sleeper(delay);
        }
    }
    {
        std::lock_guard lock(mutex_);
        last_attempts_ = retry_.max_attempts;
    }
    throw TransportError("transport failed after " + std::to_string(retry_.max_attempts) +
                         " attempts: " + last_error);
}

std::vector<Gateway::CallRecord> Gateway::calls() const {
    std::lock_guard lock(mutex_);
    return records_;
}

int Gateway::last_attempts() const {
    std::lock_guard lock(mutex_);
    return last_attempts_;
}

Money Gateway::total_cost() const {
    std::lock_guard lock(mutex_);
    return total_;
}

} // namespace qrefine

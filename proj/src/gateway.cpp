#include "benchup/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "benchup/errors.hpp"
#include "benchup/util.hpp"

namespace benchup {

using Json = nlohmann::json;

std::string cache_key(const ChatRequest& request) {
    char temperature[32];
    std::snprintf(temperature, sizeof(temperature), "%.6g", request.temperature);
    std::string material;
    material += request.model_name;
    material += '\x1f';
    material += temperature;
    material += '\x1f';
    material += std::to_string(request.max_tokens);
    material += '\x1f';
    material += request.prompt.system_text.value_or("");
    material += '\x1f';
    material += request.prompt.user_text;
    return sha256_hex(material);
}

BackendConfig mock_backend(std::map<std::string, std::string> script, MockFallback fallback) {
    BackendConfig config;
    config.kind = BackendKind::Mock;
    config.script = std::move(script);
    config.fallback = fallback;
    return config;
}

/// Counting limiter; a plain mutex/condvar pair keeps the dependency surface
/// small and lets us bump the in-flight gauge under the same lock.
class Gateway::Limiter {
public:
    explicit Limiter(std::uint32_t limit) : limit_(limit == 0 ? 1 : limit) {}

    void acquire(GatewayStats& stats) {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return active_ < limit_; });
        ++active_;
        stats.in_flight.store(active_, std::memory_order_relaxed);
        std::uint32_t peak = stats.peak_in_flight.load(std::memory_order_relaxed);
        while (active_ > peak &&
               !stats.peak_in_flight.compare_exchange_weak(peak, active_,
                                                           std::memory_order_relaxed)) {
        }
    }

    void release(GatewayStats& stats) {
        {
            std::lock_guard lock(mutex_);
            --active_;
            stats.in_flight.store(active_, std::memory_order_relaxed);
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::uint32_t limit_;
    std::uint32_t active_ = 0;
};

Gateway::Gateway(BackendConfig config)
    : config_(std::move(config)), limiter_(std::make_unique<Limiter>(config_.max_concurrency)) {
    if (config_.kind != BackendKind::Mock) {
        if (config_.endpoint_url.empty()) {
            throw ConfigError("remote backend requires endpoint_url");
        }
        if (config_.api_key_env.empty()) {
            throw ConfigError("remote backend requires api_key_env");
        }
        if (std::getenv(config_.api_key_env.c_str()) == nullptr) {
            throw ConfigError("environment variable " + config_.api_key_env + " is not set");
        }
    }
}

Gateway::~Gateway() = default;

ChatResponse Gateway::complete(const ChatRequest& request) {
    stats_.requests.fetch_add(1, std::memory_order_relaxed);
    ChatRequest effective = request;
    if (!effective.prompt.system_text && config_.default_system_text) {
        effective.prompt.system_text = config_.default_system_text;
    }
    const std::string key = cache_key(effective);
    if (config_.cache_dir) {
        if (auto hit = cache_lookup(key)) {
            stats_.cache_hits.fetch_add(1, std::memory_order_relaxed);
            return *hit;
        }
    }
    ChatResponse response = complete_uncached(effective);
    if (config_.cache_dir && response.finish_reason != FinishReason::Error) {
        cache_store(key, effective, response);
    }
    return response;
}

ChatResponse Gateway::complete_uncached(const ChatRequest& request) {
    struct SlotGuard {
        SlotGuard(Limiter& limiter, GatewayStats& stats) : limiter(limiter), stats(stats) {
            limiter.acquire(stats);
        }
        ~SlotGuard() { limiter.release(stats); }
        Limiter& limiter;
        GatewayStats& stats;
    } slot(*limiter_, stats_);

    if (config_.kind == BackendKind::Mock) {
        return mock_complete(request);
    }
    return remote_complete(request);
}

ChatResponse Gateway::mock_complete(const ChatRequest& request) {
    const auto start = std::chrono::steady_clock::now();
    if (config_.mock_latency_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.mock_latency_ms));
    }
    const std::string key = cache_key(request);
    const std::string& text = request.prompt.user_text;

    std::string reply;
    bool found = false;
    for (const auto& [needle, response] : config_.script) {
        if (needle == key) {
            reply = response;
            found = true;
            break;
        }
        bool all_present = true;
        std::size_t begin = 0;
        while (begin <= needle.size()) {
            std::size_t sep = needle.find("&&", begin);
            std::string part =
                needle.substr(begin, sep == std::string::npos ? std::string::npos : sep - begin);
            if (!part.empty() && text.find(part) == std::string::npos) {
                all_present = false;
                break;
            }
            if (sep == std::string::npos) break;
            begin = sep + 2;
        }
        if (all_present && !needle.empty()) {
            reply = response;
            found = true;
            break;
        }
    }
    if (!found) {
        if (config_.fallback == MockFallback::Refuse) {
            reply = "None";
        } else {
            auto lines = split_lines(text);
            for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
                if (!trim(*it).empty()) {
                    reply = *it;
                    break;
                }
            }
        }
    }
    ChatResponse response;
    response.text = reply;
    response.finish_reason = FinishReason::Stop;
    response.latency_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              start)
            .count());
    return response;
}

namespace {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint_url must include a scheme: " + url);
    }
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

ChatResponse Gateway::remote_complete(const ChatRequest& request) {
    const char* api_key = std::getenv(config_.api_key_env.c_str());
    if (api_key == nullptr) {
        throw ConfigError("environment variable " + config_.api_key_env + " is not set");
    }

    const SplitUrl url = split_url(config_.endpoint_url);

    Json body;
    httplib::Headers headers;
    if (config_.kind == BackendKind::OpenAiCompatible) {
        Json messages = Json::array();
        if (request.prompt.system_text) {
            messages.push_back({{"role", "system"}, {"content", *request.prompt.system_text}});
        }
        messages.push_back({{"role", "user"}, {"content", request.prompt.user_text}});
        body = {
            {"model", request.model_name},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
        };
        headers.emplace("Authorization", std::string("Bearer ") + api_key);
    } else {
        Json messages = Json::array();
        messages.push_back({{"role", "user"}, {"content", request.prompt.user_text}});
        body = {
            {"model", request.model_name},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
        };
        if (request.prompt.system_text) body["system"] = *request.prompt.system_text;
        headers.emplace("x-api-key", api_key);
        headers.emplace("anthropic-version", "2023-06-01");
    }
    const std::string payload = body.dump();

    std::mt19937_64 jitter_rng{std::random_device{}()};
    const auto start = std::chrono::steady_clock::now();

    std::string last_error;
    for (std::uint32_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            stats_.retries.fetch_add(1, std::memory_order_relaxed);
            const double cap = static_cast<double>(config_.backoff_base_ms) *
                               static_cast<double>(1ull << std::min<std::uint32_t>(attempt - 1, 20));
            std::uniform_real_distribution<double> dist(0.0, cap);
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<std::int64_t>(dist(jitter_rng))));
        }

        httplib::Client client(url.base);
        client.set_connection_timeout(0, static_cast<time_t>(config_.timeout_ms) * 1000);
        client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
        client.set_write_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

        auto result = client.Post(url.path, headers, payload, "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (is_retryable_status(result->status)) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            throw BackendRejected("backend rejected request with HTTP " +
                                      std::to_string(result->status),
                                  result->status, result->body.substr(0, 200));
        }

        Json reply;
        try {
            reply = Json::parse(result->body);
        } catch (const Json::parse_error& e) {
            throw BackendUnavailable(std::string("backend returned unparseable JSON: ") +
                                     e.what());
        }
        ChatResponse response;
        if (config_.kind == BackendKind::OpenAiCompatible) {
            const auto& choice = reply.at("choices").at(0);
            response.text = choice.at("message").at("content").get<std::string>();
            const std::string reason = choice.value("finish_reason", "stop");
            response.finish_reason =
                reason == "length" ? FinishReason::Length : FinishReason::Stop;
        } else {
            const auto& content = reply.at("content");
            std::string text;
            for (const auto& block : content) {
                if (block.value("type", "text") == "text") {
                    text += block.at("text").get<std::string>();
                }
            }
            response.text = std::move(text);
            const std::string reason = reply.value("stop_reason", "end_turn");
            response.finish_reason =
                reason == "max_tokens" ? FinishReason::Length : FinishReason::Stop;
        }
        response.latency_ms = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count());
        return response;
    }
    throw BackendUnavailable("retries exhausted calling " + config_.endpoint_url + ": " +
                             last_error);
}

std::optional<ChatResponse> Gateway::cache_lookup(const std::string& key) const {
    const auto path = *config_.cache_dir / (key + ".json");
    auto contents = try_read_file(path);
    if (!contents) return std::nullopt;
    try {
        Json envelope = Json::parse(*contents);
        ChatResponse response;
        response.text = envelope.at("text").get<std::string>();
        response.finish_reason = FinishReason::Stop;
        response.cached = true;
        return response;
    } catch (const Json::exception&) {
        return std::nullopt;  // corrupt entry; treated as a miss
    }
}

void Gateway::cache_store(const std::string& key, const ChatRequest& request,
                          const ChatResponse& response) const {
    Json envelope;
    envelope["key"] = key;
    envelope["model"] = request.model_name;
    envelope["text"] = response.text;
    write_file_atomic(*config_.cache_dir / (key + ".json"), envelope.dump() + "\n");
}

}  // namespace benchup

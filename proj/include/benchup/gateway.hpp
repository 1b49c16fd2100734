#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "benchup/promptkit.hpp"

namespace benchup {

enum class BackendKind { OpenAiCompatible, AnthropicCompatible, Mock };
enum class MockFallback { Echo, Refuse };
enum class FinishReason { Stop, Length, Error };

struct ChatRequest {
    RenderedPrompt prompt;
    std::string model_name;
    double temperature = 0.0;
    std::uint32_t max_tokens = 512;
    std::string tag;  // pipeline stage label; never part of the cache key
};

struct ChatResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    std::uint64_t latency_ms = 0;
    bool cached = false;
};

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string endpoint_url;   // remote kinds: full URL of the completion route
    std::string api_key_env;    // remote kinds: env var holding the API key
    std::uint32_t max_concurrency = 8;
    std::uint32_t max_retries = 5;
    std::uint32_t timeout_ms = 60'000;
    std::uint32_t backoff_base_ms = 1'000;
    std::optional<std::filesystem::path> cache_dir;
    /// Attached to requests that carry no system text of their own. The
    /// published prompts are single user messages, so this defaults empty.
    std::optional<std::string> default_system_text;

    // Mock backends: scripted responses. A key matches when it equals the
    // request's cache key or when every "&&"-separated needle occurs in the
    // prompt text. First matching key in order wins.
    std::map<std::string, std::string> script;
    MockFallback fallback = MockFallback::Echo;
    std::uint32_t mock_latency_ms = 0;
};

/// Stable content hash over (model, temperature, max_tokens, prompt bytes).
/// Ignores the tag, so identical calls from different stages share cache
/// entries.
std::string cache_key(const ChatRequest& request);

BackendConfig mock_backend(std::map<std::string, std::string> script, MockFallback fallback);

struct GatewayStats {
    std::atomic<std::uint64_t> requests{0};
    std::atomic<std::uint64_t> cache_hits{0};
    std::atomic<std::uint64_t> retries{0};
    std::atomic<std::uint32_t> in_flight{0};
    std::atomic<std::uint32_t> peak_in_flight{0};
};

/// Thread-safe chat-completion access with bounded concurrency, retry with
/// exponential backoff and full jitter, and an optional content-addressed
/// response cache.
class Gateway {
public:
    explicit Gateway(BackendConfig config);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    ChatResponse complete(const ChatRequest& request);

    const BackendConfig& config() const { return config_; }
    const GatewayStats& stats() const { return stats_; }

private:
    ChatResponse complete_uncached(const ChatRequest& request);
    ChatResponse mock_complete(const ChatRequest& request);
    ChatResponse remote_complete(const ChatRequest& request);

    std::optional<ChatResponse> cache_lookup(const std::string& key) const;
    void cache_store(const std::string& key, const ChatRequest& request,
                     const ChatResponse& response) const;

    BackendConfig config_;
    GatewayStats stats_;

    class Limiter;
    std::unique_ptr<Limiter> limiter_;
};

}  // namespace benchup

#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>
#include <vector>

#include <httplib.h>

#include "benchup/errors.hpp"
#include "benchup/gateway.hpp"

using namespace benchup;

namespace {

ChatRequest make_request(const std::string& text, const std::string& model = "m",
                         double temperature = 0.0, std::uint32_t max_tokens = 512) {
    ChatRequest request;
    request.prompt.user_text = text;
    request.prompt.purpose = PromptPurpose::Answer;
    request.model_name = model;
    request.temperature = temperature;
    request.max_tokens = max_tokens;
    return request;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("cache_key depends on content but not on the tag") {
    ChatRequest a = make_request("hello");
    ChatRequest b = make_request("hello");
    b.tag = "different-stage";
    CHECK(cache_key(a) == cache_key(b));

    ChatRequest warm = make_request("hello");
    warm.temperature = 0.7;
    CHECK(cache_key(warm) != cache_key(a));

    ChatRequest longer = make_request("hello", "m", 0.0, 1024);
    CHECK(cache_key(longer) != cache_key(a));

    ChatRequest other_model = make_request("hello", "m2");
    CHECK(cache_key(other_model) != cache_key(a));

    ChatRequest other_text = make_request("hello!");
    CHECK(cache_key(other_text) != cache_key(a));
}

TEST_CASE("mock backend scripts, echoes, and refuses") {
    SUBCASE("empty script with Refuse fallback always returns None") {
        Gateway gateway(mock_backend({}, MockFallback::Refuse));
        CHECK(gateway.complete(make_request("anything\nat all")).text == "None");
    }
    SUBCASE("Echo fallback returns the last non-empty line") {
        Gateway gateway(mock_backend({}, MockFallback::Echo));
        CHECK(gateway.complete(make_request("first\nsecond\n\n")).text == "second");
        CHECK(gateway.complete(make_request("only")).text == "only");
    }
    SUBCASE("substring rule matches") {
        Gateway gateway(mock_backend({{"magic words", "42"}}, MockFallback::Refuse));
        CHECK(gateway.complete(make_request("some magic words here")).text == "42");
        CHECK(gateway.complete(make_request("no match")).text == "None");
    }
    SUBCASE("compound needles require every part") {
        Gateway gateway(mock_backend({{"alpha&&beta", "both"}}, MockFallback::Refuse));
        CHECK(gateway.complete(make_request("alpha then beta")).text == "both");
        CHECK(gateway.complete(make_request("alpha only")).text == "None");
    }
    SUBCASE("exact cache-key rule matches") {
        ChatRequest request = make_request("look me up");
        Gateway gateway(mock_backend({{cache_key(request), "found"}}, MockFallback::Refuse));
        CHECK(gateway.complete(request).text == "found");
    }
}

TEST_CASE("cache returns stored responses with cached=true") {
    TempDir dir("benchup_cache_test");
    BackendConfig config = mock_backend({{"question", "the answer"}}, MockFallback::Refuse);
    config.cache_dir = dir.path;
    Gateway gateway(std::move(config));

    ChatRequest request = make_request("a question");
    ChatResponse first = gateway.complete(request);
    CHECK(first.text == "the answer");
    CHECK_FALSE(first.cached);

    ChatResponse second = gateway.complete(request);
    CHECK(second.cached);
    CHECK(second.text == first.text);
    CHECK(gateway.stats().cache_hits.load() == 1);

    // The cache file is a one-line JSON envelope named by the key.
    const auto path = dir.path / (cache_key(request) + ".json");
    CHECK(std::filesystem::exists(path));
}

TEST_CASE("remote backend retries 429 then succeeds, and counts the retry") {
    httplib::Server server;
    std::atomic<int> calls{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (calls.fetch_add(1) == 0) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        res.set_content(R"({"choices":[{"message":{"content":"ok"},"finish_reason":"stop"}]})",
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("BENCHUP_TEST_KEY", "sk-test", 1);
    BackendConfig config;
    config.kind = BackendKind::OpenAiCompatible;
    config.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    config.api_key_env = "BENCHUP_TEST_KEY";
    config.max_retries = 3;
    config.backoff_base_ms = 5;
    Gateway gateway(std::move(config));

    ChatResponse response = gateway.complete(make_request("hi"));
    CHECK(response.text == "ok");
    CHECK(response.finish_reason == FinishReason::Stop);
    CHECK(gateway.stats().retries.load() == 1);
    CHECK(calls.load() == 2);

    server.stop();
    server_thread.join();
}

TEST_CASE("remote backend surfaces non-retryable 4xx with a body excerpt") {
    httplib::Server server;
    server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 400;
        res.set_content("bad request body", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("BENCHUP_TEST_KEY", "sk-test", 1);
    BackendConfig config;
    config.kind = BackendKind::OpenAiCompatible;
    config.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/chat";
    config.api_key_env = "BENCHUP_TEST_KEY";
    Gateway gateway(std::move(config));

    try {
        gateway.complete(make_request("hi"));
        FAIL("expected BackendRejected");
    } catch (const BackendRejected& e) {
        CHECK(e.status == 400);
        CHECK(e.body_excerpt == "bad request body");
    }

    server.stop();
    server_thread.join();
}

TEST_CASE("remote backend exhausts retries into BackendUnavailable") {
    httplib::Server server;
    server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 503;
        res.set_content("down", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("BENCHUP_TEST_KEY", "sk-test", 1);
    BackendConfig config;
    config.kind = BackendKind::OpenAiCompatible;
    config.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/chat";
    config.api_key_env = "BENCHUP_TEST_KEY";
    config.max_retries = 2;
    config.backoff_base_ms = 1;
    Gateway gateway(std::move(config));

    CHECK_THROWS_AS(gateway.complete(make_request("hi")), BackendUnavailable);
    CHECK(gateway.stats().retries.load() == 2);

    server.stop();
    server_thread.join();
}

TEST_CASE("anthropic dialect parses content blocks") {
    httplib::Server server;
    std::string seen_version;
    server.Post("/v1/messages", [&](const httplib::Request& req, httplib::Response& res) {
        seen_version = req.get_header_value("anthropic-version");
        res.set_content(
            R"({"content":[{"type":"text","text":"claude says hi"}],"stop_reason":"end_turn"})",
            "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("BENCHUP_TEST_KEY", "sk-test", 1);
    BackendConfig config;
    config.kind = BackendKind::AnthropicCompatible;
    config.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/messages";
    config.api_key_env = "BENCHUP_TEST_KEY";
    Gateway gateway(std::move(config));

    CHECK(gateway.complete(make_request("hello")).text == "claude says hi");
    CHECK_FALSE(seen_version.empty());

    server.stop();
    server_thread.join();
}

TEST_CASE("missing API key environment variable is a ConfigError") {
    unsetenv("BENCHUP_MISSING_KEY");
    BackendConfig config;
    config.kind = BackendKind::OpenAiCompatible;
    config.endpoint_url = "http://127.0.0.1:1/chat";
    config.api_key_env = "BENCHUP_MISSING_KEY";
    CHECK_THROWS_AS(Gateway{std::move(config)}, ConfigError);

    BackendConfig no_url;
    no_url.kind = BackendKind::OpenAiCompatible;
    no_url.api_key_env = "X";
    CHECK_THROWS_AS(Gateway{std::move(no_url)}, ConfigError);
}

TEST_CASE("in-flight concurrency stays within the configured bound") {
    BackendConfig config = mock_backend({}, MockFallback::Echo);
    config.max_concurrency = 7;
    config.mock_latency_ms = 1;
    Gateway gateway(std::move(config));

    constexpr int kThreads = 50;
    constexpr int kCallsPerThread = 20;  // 1000 calls total
    std::vector<std::thread> threads;
    threads.reserve(kThreads);
    for (int t = 0; t < kThreads; ++t) {
        threads.emplace_back([&gateway, t] {
            for (int i = 0; i < kCallsPerThread; ++i) {
                gateway.complete(make_request("call " + std::to_string(t) + "/" +
                                              std::to_string(i)));
            }
        });
    }
    for (auto& thread : threads) thread.join();

    CHECK(gateway.stats().requests.load() == kThreads * kCallsPerThread);
    CHECK(gateway.stats().peak_in_flight.load() <= 7);
    CHECK(gateway.stats().peak_in_flight.load() >= 1);
}

TEST_CASE("a configured default system text attaches to bare requests") {
    ChatRequest bare = make_request("hello");
    ChatRequest with_system = make_request("hello");
    with_system.prompt.system_text = "be terse";

    BackendConfig config = mock_backend({{cache_key(with_system), "matched"}},
                                        MockFallback::Refuse);
    config.default_system_text = "be terse";
    Gateway gateway(std::move(config));
    // The mock looks the request up by its effective cache key, so a match
    // proves the default system text was attached.
    CHECK(gateway.complete(bare).text == "matched");

    ChatRequest own_system = make_request("hello");
    own_system.prompt.system_text = "stay verbose";
    CHECK(gateway.complete(own_system).text == "None");
}

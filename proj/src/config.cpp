#include "benchup/config.hpp"

#include <json.hpp>

#include "benchup/errors.hpp"
#include "benchup/util.hpp"

namespace benchup {

using Json = nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    std::filesystem::path p(value);
    if (p.is_absolute()) return p;
    return base / p;
}

BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "mock") return BackendKind::Mock;
    if (name == "openai" || name == "openai_compatible") return BackendKind::OpenAiCompatible;
    if (name == "anthropic" || name == "anthropic_compatible") {
        return BackendKind::AnthropicCompatible;
    }
    throw ConfigError("unknown backend kind: " + name);
}

void check_threshold(double value, const char* name) {
    if (!(value > 0.0 && value <= 1.0)) {
        throw ConfigError(std::string(name) + " must be in (0, 1], got " + std::to_string(value));
    }
}

}  // namespace

std::int64_t RunConfig::resolve_created_at() const {
    if (created_at) return iso8601_to_epoch(*created_at);
    return now_epoch_seconds();
}

RunConfig default_config() { return RunConfig{}; }

RunConfig load_config(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    const std::filesystem::path base = path.has_parent_path()
                                           ? path.parent_path()
                                           : std::filesystem::path(".");
    RunConfig config;

    if (j.contains("backend")) {
        const Json& b = j["backend"];
        config.backend.kind = backend_kind_from_string(b.value("kind", "mock"));
        config.backend.endpoint_url = b.value("endpoint_url", "");
        config.backend.api_key_env = b.value("api_key_env", "");
        config.backend.max_concurrency = b.value("max_concurrency", 8u);
        config.backend.max_retries = b.value("max_retries", 5u);
        config.backend.timeout_ms = b.value("timeout_ms", 60'000u);
        config.backend.backoff_base_ms = b.value("backoff_base_ms", 1'000u);
        config.backend.mock_latency_ms = b.value("mock_latency_ms", 0u);
        if (b.contains("cache_dir")) {
            config.backend.cache_dir = resolve(base, b["cache_dir"].get<std::string>());
        }
        if (b.contains("mock_fallback")) {
            const std::string fallback = b["mock_fallback"].get<std::string>();
            if (fallback == "echo") config.backend.fallback = MockFallback::Echo;
            else if (fallback == "refuse") config.backend.fallback = MockFallback::Refuse;
            else throw ConfigError("unknown mock_fallback: " + fallback);
        }
        if (b.contains("mock_script_file")) {
            config.mock_script_file = resolve(base, b["mock_script_file"].get<std::string>());
        }
    }

    if (j.contains("models")) {
        const Json& m = j["models"];
        config.generator_model = m.value("generator", config.generator_model);
        config.judge_model = m.value("judge", config.judge_model);
        config.answer_model = m.value("answer", config.answer_model);
    }

    if (j.contains("strategy")) {
        const Json& s = j["strategy"];
        config.strategy.target_size = s.value("target_size", std::size_t{0});
        config.strategy.max_iterations = s.value("max_iterations", 3u);
        config.strategy.dedup_threshold = s.value("dedup_threshold", 0.9);
        config.strategy.seed_limit = s.value("seed_limit", std::size_t{0});
        if (s.contains("level_plan")) {
            LevelPlan plan;
            for (auto it = s["level_plan"].begin(); it != s["level_plan"].end(); ++it) {
                auto level = cognitive_level_from_string(it.key());
                if (!level) throw ConfigError("unknown level in level_plan: " + it.key());
                plan.per_level_count[*level] = it.value().get<std::size_t>();
            }
            config.strategy.level_plan = plan;
        }
    }

    if (j.contains("contamination")) {
        const Json& c = j["contamination"];
        config.contamination.threshold = c.value("threshold", 0.75);
        for (const auto& entry : c.value("corpus", Json::array())) {
            config.contamination.corpus_paths.push_back(resolve(base, entry.get<std::string>()));
        }
    }

    if (j.contains("popularity")) {
        const Json& p = j["popularity"];
        config.popularity.year = p.value("year", 2023);
        config.popularity.client_mode = p.value("client", "file");
        if (p.contains("views_file")) {
            config.popularity.views_file = resolve(base, p["views_file"].get<std::string>());
        }
    }

    if (j.contains("output_dir")) {
        config.output_dir = resolve(base, j["output_dir"].get<std::string>());
    }
    config.random_seed = j.value("random_seed", std::uint64_t{0});
    if (j.contains("created_at")) config.created_at = j["created_at"].get<std::string>();
    if (j.contains("system_text")) {
        config.system_text = j["system_text"].get<std::string>();
        config.backend.default_system_text = config.system_text;
    }
    if (j.contains("templates_dir")) {
        config.templates_dir = resolve(base, j["templates_dir"].get<std::string>());
    }

    check_threshold(config.strategy.dedup_threshold, "strategy.dedup_threshold");
    check_threshold(config.contamination.threshold, "contamination.threshold");
    return config;
}

}  // namespace benchup

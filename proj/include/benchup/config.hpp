#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "benchup/gateway.hpp"
#include "benchup/generator.hpp"

namespace benchup {

struct StrategyOptions {
    std::size_t target_size = 0;  // 0 = match the source size (mimic)
    std::uint32_t max_iterations = 3;
    double dedup_threshold = 0.9;
    std::optional<LevelPlan> level_plan;
    std::size_t seed_limit = 0;
};

struct ContaminationOptions {
    double threshold = 0.75;
    std::vector<std::filesystem::path> corpus_paths;
};

struct PopularityOptions {
    int year = 2023;
    std::string client_mode = "file";  // "file" or "http"
    std::optional<std::filesystem::path> views_file;
};

/// One run configuration, loaded from a JSON file and overridable by CLI
/// flags (flags win). API keys are named here but only ever read from the
/// environment.
struct RunConfig {
    BackendConfig backend;
    std::string generator_model = "mock-generator";
    std::string judge_model = "mock-judge";
    std::string answer_model = "mock-answerer";
    StrategyOptions strategy;
    ContaminationOptions contamination;
    PopularityOptions popularity;
    std::filesystem::path output_dir = "out";
    std::uint64_t random_seed = 0;
    std::optional<std::string> created_at;  // ISO-8601 pin for reproducible runs
    /// Optional system message attached to every request. The published
    /// prompts are single user messages, so this stays empty by default.
    std::optional<std::string> system_text;
    std::optional<std::filesystem::path> templates_dir;
    std::optional<std::filesystem::path> mock_script_file;
    bool verbose = false;

    std::filesystem::path snapshots_dir() const { return output_dir / "snapshots"; }
    std::filesystem::path runs_dir() const { return output_dir / "runs"; }
    std::filesystem::path reports_dir() const { return output_dir / "reports"; }
    std::filesystem::path leaderboard_dir() const { return output_dir / "leaderboard"; }
    std::filesystem::path cache_dir() const { return output_dir / "cache"; }

    std::int64_t resolve_created_at() const;
};

/// Parses the config JSON. Relative paths are resolved against the config
/// file's directory; thresholds are range-checked here, before any work
/// starts.
RunConfig load_config(const std::filesystem::path& path);

RunConfig default_config();

}  // namespace benchup

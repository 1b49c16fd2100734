#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "benchup/config.hpp"

namespace benchup {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitWarnings = 2;

struct UpdateArgs {
    std::string strategy;  // "mimic" or "extend"
    std::vector<std::filesystem::path> task_files;
    std::optional<std::filesystem::path> seeds_file;
    std::optional<std::size_t> per_level;
    std::uint32_t iterations = 1;  // independent update runs (stability protocol)
    std::optional<std::size_t> target_size;
    std::optional<std::string> task_id;
    /// Overrides the source file's task description (generation prompts
    /// require one; MMLU CSVs carry none).
    std::optional<std::string> description;
    bool dry_run = false;
};

struct ValidateArgs {
    std::filesystem::path snapshot;
    bool dry_run = false;
};

struct ContaminateArgs {
    std::filesystem::path snapshot;
    std::vector<std::filesystem::path> corpus;  // overrides config when non-empty
    bool dry_run = false;
};

struct EvalArgs {
    std::vector<std::filesystem::path> snapshots;  // >1 aggregates stability stats
    /// With one snapshot named "..._r1...", evaluates runs 1..N and
    /// aggregates their stability stats.
    std::uint32_t runs = 1;
    std::optional<std::filesystem::path> seeds_file;
    std::optional<std::string> model;
    bool dry_run = false;
};

struct LeaderboardArgs {
    std::optional<std::filesystem::path> reports_dir;
    bool dry_run = false;
};

struct ExportFinetuneArgs {
    std::filesystem::path snapshot;
    std::string style = "leakage";  // or "with-rationale"
    std::optional<std::filesystem::path> out;
    bool offline = false;
    bool dry_run = false;
};

int cmd_update(RunConfig& config, const UpdateArgs& args);
int cmd_validate(RunConfig& config, const ValidateArgs& args);
int cmd_contaminate(RunConfig& config, const ContaminateArgs& args);
int cmd_eval(RunConfig& config, const EvalArgs& args);
int cmd_leaderboard(RunConfig& config, const LeaderboardArgs& args);
int cmd_export_finetune(RunConfig& config, const ExportFinetuneArgs& args);

/// Reads a source benchmark file by extension: .json parses as a BIG-bench
/// task, .csv as MMLU rows. The task id defaults to the file stem.
DatasetSnapshot load_task_file(const std::filesystem::path& path);

}  // namespace benchup

#pragma once

#include <map>
#include <string>
#include <vector>

#include "benchup/evaluator.hpp"

namespace benchup {

/// One stored evaluation result, as written by the eval command.
struct EvalReportSummary {
    std::string task_id;
    std::string model_name;
    std::string metric_kind;  // "exact_match" or "full_mark_rate"
    double score = 0.0;
    StabilityStats stability;  // per_iteration_scores may hold a single run
};

std::string eval_report_to_json(const EvalReportSummary& summary,
                                const std::optional<LevelBreakdown>& levels,
                                const std::vector<PopularityBin>& bins);

EvalReportSummary eval_report_from_json(const std::string& bytes);

struct LeaderboardCell {
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t runs = 1;

    std::string render() const;
};

struct LeaderboardRow {
    std::string model_name;
    std::map<std::string, LeaderboardCell> cells;  // task -> cell
    double overall = 0.0;
};

struct Leaderboard {
    std::vector<std::string> tasks;     // sorted
    std::vector<LeaderboardRow> rows;   // sorted by overall desc, then name
};

/// Builds the board from stored reports. Duplicate (model, task) pairs with
/// diverging scores are an error naming the offenders; exact duplicates
/// collapse silently.
Leaderboard build_leaderboard(const std::vector<EvalReportSummary>& reports);

std::string leaderboard_markdown(const Leaderboard& board);
std::string leaderboard_html(const Leaderboard& board);

}  // namespace benchup

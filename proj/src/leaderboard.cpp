#include "benchup/leaderboard.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "benchup/errors.hpp"

namespace benchup {

using Json = nlohmann::json;

std::string eval_report_to_json(const EvalReportSummary& summary,
                                const std::optional<LevelBreakdown>& levels,
                                const std::vector<PopularityBin>& bins) {
    Json j;
    j["task"] = summary.task_id;
    j["model"] = summary.model_name;
    j["metric_kind"] = summary.metric_kind;
    j["score"] = summary.score;
    j["stability"] = {
        {"mean", summary.stability.mean},
        {"std", summary.stability.std_dev},
        {"runs", summary.stability.per_iteration_scores},
    };
    if (levels) {
        Json level_rates = Json::object();
        for (const auto& [level, rate] : levels->rates) {
            level_rates[std::string(to_string(level))] = rate;
        }
        j["levels"] = {
            {"rates", std::move(level_rates)},
            {"overall", levels->overall},
            {"missing_levels", levels->missing_levels},
        };
    }
    if (!bins.empty()) {
        Json bin_rows = Json::array();
        for (const PopularityBin& bin : bins) {
            Json row;
            row["lower"] = bin.lower;
            if (bin.upper) row["upper"] = *bin.upper;
            row["sample_count"] = bin.sample_count;
            Json rates = Json::object();
            for (const auto& [model, rate] : bin.rate_per_model) rates[model] = rate;
            row["rates"] = std::move(rates);
            bin_rows.push_back(std::move(row));
        }
        j["popularity_bins"] = std::move(bin_rows);
    }
    return j.dump(2) + "\n";
}

EvalReportSummary eval_report_from_json(const std::string& bytes) {
    Json j;
    try {
        j = Json::parse(bytes);
    } catch (const Json::parse_error& e) {
        throw FormatError(std::string("eval report is not valid JSON: ") + e.what());
    }
    EvalReportSummary summary;
    try {
        summary.task_id = j.at("task").get<std::string>();
        summary.model_name = j.at("model").get<std::string>();
        summary.metric_kind = j.at("metric_kind").get<std::string>();
        summary.score = j.at("score").get<double>();
        summary.stability.model_name = summary.model_name;
        summary.stability.task_id = summary.task_id;
        summary.stability.mean = j.at("stability").at("mean").get<double>();
        summary.stability.std_dev = j.at("stability").at("std").get<double>();
        summary.stability.per_iteration_scores =
            j.at("stability").at("runs").get<std::vector<double>>();
    } catch (const Json::exception& e) {
        throw FormatError(std::string("eval report is malformed: ") + e.what());
    }
    return summary;
}

std::string LeaderboardCell::render() const {
    char buf[64];
    if (runs > 1) {
        std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", mean, std_dev);
    } else {
        std::snprintf(buf, sizeof(buf), "%.1f", mean);
    }
    return buf;
}

Leaderboard build_leaderboard(const std::vector<EvalReportSummary>& reports) {
    if (reports.empty()) throw Error("no evaluation reports found");

    std::map<std::pair<std::string, std::string>, LeaderboardCell> cells;
    std::vector<std::string> conflicts;
    std::set<std::string> task_set;

    for (const EvalReportSummary& report : reports) {
        LeaderboardCell cell;
        cell.mean = report.stability.mean;
        cell.std_dev = report.stability.std_dev;
        cell.runs = std::max<std::size_t>(1, report.stability.per_iteration_scores.size());
        const auto key = std::make_pair(report.model_name, report.task_id);
        auto it = cells.find(key);
        if (it != cells.end()) {
            const bool same = std::abs(it->second.mean - cell.mean) < 1e-9 &&
                              std::abs(it->second.std_dev - cell.std_dev) < 1e-9 &&
                              it->second.runs == cell.runs;
            if (!same) conflicts.push_back(report.model_name + "/" + report.task_id);
            continue;
        }
        cells.emplace(key, cell);
        task_set.insert(report.task_id);
    }
    if (!conflicts.empty()) {
        std::string names;
        for (const std::string& conflict : conflicts) {
            if (!names.empty()) names += ", ";
            names += conflict;
        }
        throw Error("conflicting duplicate reports for: " + names);
    }

    Leaderboard board;
    board.tasks.assign(task_set.begin(), task_set.end());

    std::map<std::string, LeaderboardRow> rows;
    for (const auto& [key, cell] : cells) {
        LeaderboardRow& row = rows[key.first];
        row.model_name = key.first;
        row.cells[key.second] = cell;
    }
    for (auto& [model, row] : rows) {
        double sum = 0.0;
        for (const auto& [task, cell] : row.cells) sum += cell.mean;
        row.overall = row.cells.empty() ? 0.0 : sum / static_cast<double>(row.cells.size());
        board.rows.push_back(row);
    }
    std::sort(board.rows.begin(), board.rows.end(),
              [](const LeaderboardRow& a, const LeaderboardRow& b) {
                  if (a.overall != b.overall) return a.overall > b.overall;
                  return a.model_name < b.model_name;
              });
    return board;
}

namespace {

std::string format_overall(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

std::string html_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c); break;
        }
    }
    return out;
}

}  // namespace

std::string leaderboard_markdown(const Leaderboard& board) {
    std::ostringstream out;
    out << "# Leaderboard\n\n";
    out << "| Model |";
    for (const std::string& task : board.tasks) out << ' ' << task << " |";
    out << " Overall |\n";
    out << "| --- |";
    for (std::size_t i = 0; i < board.tasks.size(); ++i) out << " --- |";
    out << " --- |\n";
    for (const LeaderboardRow& row : board.rows) {
        out << "| " << row.model_name << " |";
        for (const std::string& task : board.tasks) {
            auto it = row.cells.find(task);
            out << ' ' << (it == row.cells.end() ? std::string("-") : it->second.render()) << " |";
        }
        out << ' ' << format_overall(row.overall) << " |\n";
    }
    return out.str();
}

std::string leaderboard_html(const Leaderboard& board) {
    std::ostringstream out;
    out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
        << "<title>Leaderboard</title>\n<style>\n"
        << "body{font-family:sans-serif;margin:2rem;}\n"
        << "table{border-collapse:collapse;}\n"
        << "th,td{border:1px solid #999;padding:0.4rem 0.8rem;text-align:right;}\n"
        << "th:first-child,td:first-child{text-align:left;}\n"
        << "thead{background:#eee;}\n"
        << "</style>\n</head>\n<body>\n<h1>Leaderboard</h1>\n<table>\n<thead>\n<tr>"
        << "<th>Model</th>";
    for (const std::string& task : board.tasks) out << "<th>" << html_escape(task) << "</th>";
    out << "<th>Overall</th></tr>\n</thead>\n<tbody>\n";
    for (const LeaderboardRow& row : board.rows) {
        out << "<tr><td>" << html_escape(row.model_name) << "</td>";
        for (const std::string& task : board.tasks) {
            auto it = row.cells.find(task);
            out << "<td>"
                << (it == row.cells.end() ? std::string("-") : html_escape(it->second.render()))
                << "</td>";
        }
        out << "<td>" << format_overall(row.overall) << "</td></tr>\n";
    }
    out << "</tbody>\n</table>\n</body>\n</html>\n";
    return out.str();
}

}  // namespace benchup

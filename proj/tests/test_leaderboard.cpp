#include <doctest.h>

#include "benchup/errors.hpp"
#include "benchup/leaderboard.hpp"

using namespace benchup;

namespace {

EvalReportSummary report(const std::string& model, const std::string& task, double mean,
                         double std_dev = 0.0, std::size_t runs = 1) {
    EvalReportSummary summary;
    summary.model_name = model;
    summary.task_id = task;
    summary.metric_kind = "exact_match";
    summary.score = mean;
    summary.stability.model_name = model;
    summary.stability.task_id = task;
    summary.stability.mean = mean;
    summary.stability.std_dev = std_dev;
    for (std::size_t i = 0; i < runs; ++i) summary.stability.per_iteration_scores.push_back(mean);
    return summary;
}

}  // namespace

TEST_CASE("leaderboard sorts by overall descending with name tie-break") {
    Leaderboard board = build_leaderboard({
        report("zephyr", "sports", 50.0),
        report("zephyr", "algebra", 70.0),
        report("aurora", "sports", 80.0),
        report("aurora", "algebra", 90.0),
        report("middle", "sports", 60.0),
        report("middle", "algebra", 60.0),
    });
    REQUIRE(board.rows.size() == 3);
    CHECK(board.rows[0].model_name == "aurora");
    CHECK(board.rows[0].overall == doctest::Approx(85.0));
    CHECK(board.rows[1].model_name == "middle");
    CHECK(board.rows[2].model_name == "zephyr");
    REQUIRE(board.tasks.size() == 2);
    CHECK(board.tasks[0] == "algebra");  // columns sorted by task id

    // Tie on overall: stable order by model name.
    Leaderboard tie = build_leaderboard({
        report("beta", "sports", 50.0),
        report("alpha", "sports", 50.0),
    });
    CHECK(tie.rows[0].model_name == "alpha");
    CHECK(tie.rows[1].model_name == "beta");
}

TEST_CASE("cells render as mean or mean-plus-minus-std") {
    LeaderboardCell single{92.14, 0.0, 1};
    CHECK(single.render() == "92.1");
    LeaderboardCell stable{92.1, 1.6, 4};
    CHECK(stable.render() == "92.1 ± 1.6");
}

TEST_CASE("markdown and html carry every row and are deterministic") {
    std::vector<EvalReportSummary> reports = {
        report("aurora", "sports", 80.0, 1.0, 4),
        report("zephyr", "sports", 50.0),
        report("aurora", "algebra", 90.0),
    };
    Leaderboard board = build_leaderboard(reports);
    const std::string md = leaderboard_markdown(board);
    CHECK(md.find("| aurora |") != std::string::npos);
    CHECK(md.find("80.0 ± 1.0") != std::string::npos);
    CHECK(md.find("| zephyr |") != std::string::npos);
    CHECK(md.find(" - |") != std::string::npos);  // zephyr has no algebra cell

    const std::string html = leaderboard_html(board);
    CHECK(html.find("<!DOCTYPE html>") == 0);
    CHECK(html.find("aurora") != std::string::npos);
    CHECK(html.find("</html>") != std::string::npos);

    CHECK(leaderboard_markdown(build_leaderboard(reports)) == md);
    CHECK(leaderboard_html(build_leaderboard(reports)) == html);
}

TEST_CASE("conflicting duplicate reports raise an error naming the pair") {
    std::vector<EvalReportSummary> reports = {
        report("aurora", "sports", 80.0),
        report("aurora", "sports", 81.0),
    };
    try {
        build_leaderboard(reports);
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("aurora/sports") != std::string::npos);
    }
    // Exact duplicates collapse silently.
    CHECK(build_leaderboard({report("aurora", "sports", 80.0), report("aurora", "sports", 80.0)})
              .rows.size() == 1);
}

TEST_CASE("eval report JSON round-trips through the summary reader") {
    EvalReportSummary summary = report("aurora", "sports", 92.1, 1.6, 4);
    const std::string bytes = eval_report_to_json(summary, std::nullopt, {});
    EvalReportSummary back = eval_report_from_json(bytes);
    CHECK(back.model_name == "aurora");
    CHECK(back.task_id == "sports");
    CHECK(back.metric_kind == "exact_match");
    CHECK(back.stability.mean == doctest::Approx(92.1));
    CHECK(back.stability.std_dev == doctest::Approx(1.6));
    CHECK(back.stability.per_iteration_scores.size() == 4);

    CHECK_THROWS_AS(eval_report_from_json("not json"), FormatError);
}

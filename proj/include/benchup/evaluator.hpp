#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "benchup/corpus.hpp"
#include "benchup/gateway.hpp"
#include "benchup/seed.hpp"

namespace benchup {

// ---------------------------------------------------------------------------
// Judge verdicts
// ---------------------------------------------------------------------------

struct JudgeVerdict {
    int accuracy = 1;
    int coherence = 1;
    int factuality = 1;
    std::string raw;

    bool full_mark() const { return accuracy == 3 && coherence == 3 && factuality == 3; }
};

/// Case-insensitive scan for the three labeled scores anywhere in the text;
/// the last occurrence of each label wins. Missing labels or scores outside
/// 1..3 raise JudgeParseError.
JudgeVerdict parse_judge_verdict(const std::string& text);

/// Runs the judge model over (question, reference, candidate) at temperature
/// 0 / 1024 tokens. One re-ask with a format reminder before giving up.
JudgeVerdict judge(const Sample& sample, const std::string& candidate, Gateway& gateway,
                   const std::string& judge_model);

// ---------------------------------------------------------------------------
// Records and metrics
// ---------------------------------------------------------------------------

enum class OutcomeKind { ExactMatch, Judge };

struct EvalOutcome {
    OutcomeKind kind = OutcomeKind::ExactMatch;
    bool em_correct = false;
    std::optional<JudgeVerdict> verdict;

    bool success() const {
        return kind == OutcomeKind::ExactMatch ? em_correct : verdict && verdict->full_mark();
    }
};

struct EvalRecord {
    std::string sample_id;
    std::string model_name;
    std::string response_text;
    EvalOutcome outcome;
    std::optional<CognitiveLevel> level;
    std::optional<std::uint64_t> popularity;
};

/// Option-identifier extraction for closed-form answers. Cascade: leading
/// standalone letter, unique standalone letter anywhere, unique exact
/// option-text occurrence, unique case-insensitive occurrence. All matching
/// is token-boundary so "implausible" never hits "plausible". Ties and zero
/// hits yield nullopt.
std::optional<std::string> extract_mc_answer(const std::string& response,
                                             const AnswerSpec& answer);

/// Exact-match correctness for one response. FreeResponse references are
/// compared lowercased, trimmed, and with internal whitespace collapsed.
bool em_correct(const Sample& sample, const std::string& response);

/// 100 * correct / total over EM records. Empty input raises EmptyEvaluation.
double exact_match(const std::vector<EvalRecord>& records);

/// 100 * |full-mark verdicts| / |verdicts|. Empty input raises EmptyEvaluation.
double full_mark_rate(const std::vector<JudgeVerdict>& verdicts);

// ---------------------------------------------------------------------------
// Stability across update iterations
// ---------------------------------------------------------------------------

struct StabilityStats {
    std::string model_name;
    std::string task_id;
    std::vector<double> per_iteration_scores;
    double mean = 0.0;
    double std_dev = 0.0;  // population (divisor N); flip to N-1 downstream if needed
};

StabilityStats stability_stats(const std::vector<std::pair<std::uint32_t, double>>& runs,
                               std::string model_name = {}, std::string task_id = {});

/// "92.1 ± 1.6" style cell, one decimal place.
std::string format_mean_std(double mean, double std_dev);

// ---------------------------------------------------------------------------
// Difficulty breakdowns
// ---------------------------------------------------------------------------

struct LevelBreakdown {
    std::map<CognitiveLevel, double> rates;  // levels with records only
    double overall = 0.0;                    // unweighted mean of present level rates
    bool missing_levels = false;
};

LevelBreakdown level_breakdown(const std::vector<EvalRecord>& records);

struct PopularityBin {
    std::uint64_t lower = 0;                        // inclusive
    std::optional<std::uint64_t> upper;             // exclusive; nullopt = unbounded
    std::size_t sample_count = 0;
    std::map<std::string, double> rate_per_model;   // absent for empty bins
};

inline const std::vector<std::uint64_t> kDefaultPopularityEdges = {1'000, 10'000, 100'000,
                                                                   1'000'000, 10'000'000};

std::vector<PopularityBin> popularity_bins(const std::vector<EvalRecord>& records,
                                           const std::vector<std::uint64_t>& edges);

// ---------------------------------------------------------------------------
// Seed popularity (wiki pageviews)
// ---------------------------------------------------------------------------

struct PageviewResult {
    int status = 0;
    std::string body;
};

class PageviewClient {
public:
    virtual ~PageviewClient() = default;
    virtual PageviewResult get(const std::string& path) = 0;
};

/// Remote client for the standard pageviews REST API; one host, fixed
/// user-agent, politeness delay between calls.
class HttpPageviewClient : public PageviewClient {
public:
    explicit HttpPageviewClient(std::string host = "https://wikimedia.org",
                                std::uint32_t politeness_delay_ms = 100);
    ~HttpPageviewClient() override;
    PageviewResult get(const std::string& path) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Test/file-backed client mapping article titles to annual view counts.
class FilePageviewClient : public PageviewClient {
public:
    explicit FilePageviewClient(std::map<std::string, std::uint64_t> views);
    static FilePageviewClient from_json_file(const std::filesystem::path& path);
    PageviewResult get(const std::string& path) override;

private:
    std::map<std::string, std::uint64_t> views_;
};

/// REST path for one title/year; spaces become underscores.
std::string pageview_path(const std::string& entity, int year);

/// Sums the monthly view counts for the entity over the year. HTTP 404
/// raises PopularityUnknown; other failures are retried once, then raised.
std::uint64_t popularity_fetch(const std::string& entity, int year, PageviewClient& client);

}  // namespace benchup

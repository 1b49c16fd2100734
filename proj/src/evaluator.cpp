#include "benchup/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "benchup/errors.hpp"
#include "benchup/promptkit.hpp"
#include "benchup/util.hpp"

namespace benchup {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Judge verdict parsing
// ---------------------------------------------------------------------------

namespace {

std::optional<int> last_labeled_score(const std::string& text, const char* label) {
    const std::regex re(std::string(label) + R"(\s*[:\-]?\s*(\d+))", std::regex::icase);
    std::optional<int> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
         it != std::sregex_iterator(); ++it) {
        last = std::stoi(it->str(1));
    }
    return last;
}

int require_score(const std::optional<int>& value, const char* label, const std::string& raw) {
    if (!value) {
        throw JudgeParseError(std::string("judge output lacks a ") + label + " score", raw);
    }
    if (*value < 1 || *value > 3) {
        throw JudgeParseError(std::string(label) + " score " + std::to_string(*value) +
                                  " is outside 1..3",
                              raw);
    }
    return *value;
}

}  // namespace

JudgeVerdict parse_judge_verdict(const std::string& text) {
    JudgeVerdict verdict;
    verdict.raw = text;
    verdict.accuracy = require_score(last_labeled_score(text, "accuracy"), "accuracy", text);
    verdict.coherence = require_score(last_labeled_score(text, "coherence"), "coherence", text);
    verdict.factuality = require_score(last_labeled_score(text, "factuality"), "factuality", text);
    return verdict;
}

JudgeVerdict judge(const Sample& sample, const std::string& candidate, Gateway& gateway,
                   const std::string& judge_model) {
    if (sample.answer.kind != AnswerKind::FreeResponse) {
        throw Error("judge requires a free-response reference answer");
    }
    ChatRequest request;
    request.prompt = render_judge_prompt(sample.input_text, sample.answer.reference, candidate);
    request.model_name = judge_model;
    request.temperature = 0.0;
    request.max_tokens = 1024;
    request.tag = "judge";

    ChatResponse response = gateway.complete(request);
    try {
        return parse_judge_verdict(response.text);
    } catch (const JudgeParseError&) {
        // One nudge with the format line before giving up.
        ChatRequest retry = request;
        retry.prompt.user_text += "\n\nReturn in formate:  Accuracy: 1";
        response = gateway.complete(retry);
        return parse_judge_verdict(response.text);
    }
}

// ---------------------------------------------------------------------------
// Exact match
// ---------------------------------------------------------------------------

namespace {

bool is_option_letter(const AnswerSpec& answer, char c) {
    for (const auto& [letter, text] : answer.options) {
        if (!letter.empty() && std::toupper(static_cast<unsigned char>(c)) ==
                                   std::toupper(static_cast<unsigned char>(letter[0]))) {
            return true;
        }
    }
    return false;
}

std::string letter_of(const AnswerSpec& answer, char c) {
    for (const auto& [letter, text] : answer.options) {
        if (!letter.empty() && std::toupper(static_cast<unsigned char>(c)) ==
                                   std::toupper(static_cast<unsigned char>(letter[0]))) {
            return letter;
        }
    }
    return {};
}

}  // namespace

std::optional<std::string> extract_mc_answer(const std::string& response,
                                             const AnswerSpec& answer) {
    const std::string text = trim(response);
    if (text.empty()) return std::nullopt;

    if (answer.kind == AnswerKind::MultipleChoice) {
        // (1) Leading standalone letter: "A", "A.", "a)", "B:".
        if (is_option_letter(answer, text[0])) {
            if (text.size() == 1) return letter_of(answer, text[0]);
            const char next = text[1];
            if (next == '.' || next == ')' || next == ':' || next == ',' || next == '\n' ||
                next == '\r') {
                return letter_of(answer, text[0]);
            }
        }
        // (1b) A single distinct standalone letter anywhere; two distinct
        // letters are a tie.
        std::set<std::string> letters_seen;
        for (const auto& [letter, option_text] : answer.options) {
            if (count_word_occurrences(text, letter) > 0) letters_seen.insert(letter);
        }
        if (letters_seen.size() > 1) return std::nullopt;

        std::set<std::string> exact_hits;
        std::set<std::string> loose_hits;
        const std::string lower = to_lower(text);
        for (const auto& [letter, option_text] : answer.options) {
            if (count_word_occurrences(text, option_text) > 0) exact_hits.insert(letter);
            if (count_word_occurrences(lower, to_lower(option_text)) > 0) loose_hits.insert(letter);
        }
        if (exact_hits.size() == 1) return *exact_hits.begin();
        if (exact_hits.size() > 1) return std::nullopt;
        if (loose_hits.size() == 1) return *loose_hits.begin();
        if (loose_hits.empty() && letters_seen.size() == 1) return *letters_seen.begin();
        return std::nullopt;
    }

    // TargetScores: option identifiers are the option texts themselves.
    std::set<std::string> exact_hits;
    std::set<std::string> loose_hits;
    const std::string lower = to_lower(text);
    for (const auto& [option_text, score] : answer.target_scores) {
        if (count_word_occurrences(text, option_text) > 0) exact_hits.insert(option_text);
        if (count_word_occurrences(lower, to_lower(option_text)) > 0) loose_hits.insert(option_text);
    }
    if (exact_hits.size() == 1) return *exact_hits.begin();
    if (exact_hits.size() > 1) return std::nullopt;
    if (loose_hits.size() == 1) return *loose_hits.begin();
    return std::nullopt;
}

bool em_correct(const Sample& sample, const std::string& response) {
    switch (sample.answer.kind) {
        case AnswerKind::MultipleChoice: {
            auto extracted = extract_mc_answer(response, sample.answer);
            return extracted && *extracted == sample.answer.answer_letter;
        }
        case AnswerKind::TargetScores: {
            auto extracted = extract_mc_answer(response, sample.answer);
            return extracted && *extracted == sample.answer.correct_text();
        }
        case AnswerKind::FreeResponse: {
            const std::string got = to_lower(collapse_whitespace(response));
            const std::string want = to_lower(collapse_whitespace(sample.answer.reference));
            return got == want;
        }
    }
    return false;
}

double exact_match(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw EmptyEvaluation("no records to score");
    std::size_t correct = 0;
    for (const EvalRecord& record : records) {
        if (record.outcome.kind != OutcomeKind::ExactMatch) {
            throw Error("exact_match received a judge-kind record");
        }
        if (record.outcome.em_correct) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
}

double full_mark_rate(const std::vector<JudgeVerdict>& verdicts) {
    if (verdicts.empty()) throw EmptyEvaluation("no verdicts to score");
    std::size_t full = 0;
    for (const JudgeVerdict& verdict : verdicts) {
        if (verdict.full_mark()) ++full;
    }
    return 100.0 * static_cast<double>(full) / static_cast<double>(verdicts.size());
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

StabilityStats stability_stats(const std::vector<std::pair<std::uint32_t, double>>& runs,
                               std::string model_name, std::string task_id) {
    if (runs.empty()) throw EmptyEvaluation("stability requires at least one run");
    StabilityStats stats;
    stats.model_name = std::move(model_name);
    stats.task_id = std::move(task_id);

    std::vector<std::pair<std::uint32_t, double>> ordered = runs;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    double sum = 0.0;
    for (const auto& [iteration, score] : ordered) {
        stats.per_iteration_scores.push_back(score);
        sum += score;
    }
    const double n = static_cast<double>(ordered.size());
    stats.mean = sum / n;
    double variance = 0.0;
    for (double score : stats.per_iteration_scores) {
        const double d = score - stats.mean;
        variance += d * d;
    }
    stats.std_dev = std::sqrt(variance / n);
    return stats;
}

std::string format_mean_std(double mean, double std_dev) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", mean, std_dev);
    return buf;
}

// ---------------------------------------------------------------------------
// Breakdowns
// ---------------------------------------------------------------------------

LevelBreakdown level_breakdown(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw EmptyEvaluation("no records to break down");
    std::map<CognitiveLevel, std::pair<std::size_t, std::size_t>> counts;  // (success, total)
    for (const EvalRecord& record : records) {
        if (!record.level) {
            throw Error("record " + record.sample_id + " has no cognitive level");
        }
        auto& [success, total] = counts[*record.level];
        if (record.outcome.success()) ++success;
        ++total;
    }
    LevelBreakdown breakdown;
    double sum = 0.0;
    for (const auto& [level, pair] : counts) {
        const double rate = 100.0 * static_cast<double>(pair.first) /
                            static_cast<double>(pair.second);
        breakdown.rates[level] = rate;
        sum += rate;
    }
    breakdown.overall = sum / static_cast<double>(breakdown.rates.size());
    breakdown.missing_levels = breakdown.rates.size() < kAllLevels.size();
    return breakdown;
}

std::vector<PopularityBin> popularity_bins(const std::vector<EvalRecord>& records,
                                           const std::vector<std::uint64_t>& edges) {
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (edges[i] <= edges[i - 1]) throw Error("bin edges must be strictly ascending");
    }
    std::vector<PopularityBin> bins;
    std::uint64_t lower = 0;
    for (std::uint64_t edge : edges) {
        bins.push_back({lower, edge, 0, {}});
        lower = edge;
    }
    bins.push_back({lower, std::nullopt, 0, {}});

    std::vector<std::set<std::string>> distinct_samples(bins.size());
    std::vector<std::map<std::string, std::pair<std::size_t, std::size_t>>> tallies(bins.size());
    for (const EvalRecord& record : records) {
        if (!record.popularity) continue;
        const std::uint64_t views = *record.popularity;
        std::size_t index = bins.size() - 1;
        for (std::size_t b = 0; b < bins.size(); ++b) {
            if (!bins[b].upper || views < *bins[b].upper) {
                if (views >= bins[b].lower) {
                    index = b;
                    break;
                }
            }
        }
        distinct_samples[index].insert(record.sample_id);
        auto& [success, total] = tallies[index][record.model_name];
        if (record.outcome.success()) ++success;
        ++total;
    }
    for (std::size_t b = 0; b < bins.size(); ++b) {
        bins[b].sample_count = distinct_samples[b].size();
        for (const auto& [model, pair] : tallies[b]) {
            bins[b].rate_per_model[model] =
                100.0 * static_cast<double>(pair.first) / static_cast<double>(pair.second);
        }
    }
    return bins;
}

// ---------------------------------------------------------------------------
// Pageviews
// ---------------------------------------------------------------------------

std::string pageview_path(const std::string& entity, int year) {
    std::string title = trim(entity);
    std::replace(title.begin(), title.end(), ' ', '_');
    return "/api/rest_v1/metrics/pageviews/per-article/en.wikipedia/all-access/all-agents/" +
           title + "/monthly/" + std::to_string(year) + "0101/" + std::to_string(year) + "1231";
}

struct HttpPageviewClient::Impl {
    std::string host;
    std::uint32_t delay_ms;
    std::mutex mutex;
    std::chrono::steady_clock::time_point last_call{};
};

HttpPageviewClient::HttpPageviewClient(std::string host, std::uint32_t politeness_delay_ms)
    : impl_(std::make_unique<Impl>()) {
    impl_->host = std::move(host);
    impl_->delay_ms = politeness_delay_ms;
}

HttpPageviewClient::~HttpPageviewClient() = default;

PageviewResult HttpPageviewClient::get(const std::string& path) {
    {
        std::lock_guard lock(impl_->mutex);
        const auto now = std::chrono::steady_clock::now();
        const auto since = std::chrono::duration_cast<std::chrono::milliseconds>(
            now - impl_->last_call);
        if (impl_->last_call.time_since_epoch().count() != 0 &&
            since.count() < impl_->delay_ms) {
            std::this_thread::sleep_for(std::chrono::milliseconds(impl_->delay_ms) - since);
        }
        impl_->last_call = std::chrono::steady_clock::now();
    }
    httplib::Client client(impl_->host);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(30, 0);
    httplib::Headers headers = {{"User-Agent", "benchup/0.1 (dataset popularity fetch)"}};
    auto result = client.Get(path, headers);
    if (!result) return {0, "transport error: " + httplib::to_string(result.error())};
    return {result->status, result->body};
}

FilePageviewClient::FilePageviewClient(std::map<std::string, std::uint64_t> views)
    : views_(std::move(views)) {}

FilePageviewClient FilePageviewClient::from_json_file(const std::filesystem::path& path) {
    const Json doc = Json::parse(read_file(path));
    std::map<std::string, std::uint64_t> views;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        views[it.key()] = it.value().get<std::uint64_t>();
    }
    return FilePageviewClient(std::move(views));
}

PageviewResult FilePageviewClient::get(const std::string& path) {
    // .../per-article/en.wikipedia/all-access/all-agents/<title>/monthly/...
    static const std::string marker = "/all-agents/";
    const std::size_t start = path.find(marker);
    if (start == std::string::npos) return {404, "{}"};
    const std::size_t title_start = start + marker.size();
    const std::size_t title_end = path.find('/', title_start);
    std::string title = path.substr(title_start, title_end - title_start);
    std::replace(title.begin(), title.end(), '_', ' ');
    auto it = views_.find(title);
    if (it == views_.end()) return {404, R"({"type":"not_found"})"};
    Json body;
    body["items"] = Json::array({Json{{"views", it->second}}});
    return {200, body.dump()};
}

std::uint64_t popularity_fetch(const std::string& entity, int year, PageviewClient& client) {
    if (trim(entity).empty()) throw PopularityUnknown("empty entity name");
    const std::string path = pageview_path(entity, year);

    PageviewResult result;
    for (int attempt = 0; attempt < 2; ++attempt) {
        result = client.get(path);
        if (result.status == 404) {
            throw PopularityUnknown("no pageview data for \"" + entity + "\"");
        }
        if (result.status == 200) break;
    }
    if (result.status != 200) {
        throw BackendUnavailable("pageview fetch for \"" + entity + "\" failed with status " +
                                 std::to_string(result.status) + ": " + result.body.substr(0, 120));
    }
    Json doc;
    try {
        doc = Json::parse(result.body);
    } catch (const Json::parse_error& e) {
        throw BackendUnavailable(std::string("pageview response unparseable: ") + e.what());
    }
    std::uint64_t total = 0;
    for (const auto& item : doc.value("items", Json::array())) {
        total += item.value("views", std::uint64_t{0});
    }
    return total;
}

}  // namespace benchup

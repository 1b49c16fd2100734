#include "benchup/generator.hpp"

#include <algorithm>
#include <atomic>
#include <regex>
#include <thread>

#include <json.hpp>

#include "benchup/errors.hpp"
#include "benchup/promptkit.hpp"
#include "benchup/util.hpp"
#include "benchup/validators.hpp"

namespace benchup {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

LevelPlan LevelPlan::uniform(std::size_t per_level) {
    LevelPlan plan;
    for (CognitiveLevel level : kAllLevels) plan.per_level_count[level] = per_level;
    return plan;
}

std::size_t LevelPlan::total() const {
    std::size_t sum = 0;
    for (const auto& [level, count] : per_level_count) sum += count;
    return sum;
}

std::string_view to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::ParseFailure: return "parse_failure";
        case RejectReason::WrongAnswer: return "wrong_answer";
        case RejectReason::Unparseable: return "unparseable";
        case RejectReason::SelfCheckFailed: return "self_check_failed";
        case RejectReason::Duplicate: return "duplicate";
        case RejectReason::BackendFailure: return "backend_failure";
    }
    return "parse_failure";
}

std::string run_report_json(const GenerationRun& run) {
    Json j;
    j["strategy"] = std::string(to_string(run.strategy));
    j["iteration"] = run.iteration;
    j["issued"] = run.issued;
    j["accepted"] = run.accepted.size();
    j["refused"] = run.refused;
    Json stats = Json::object();
    for (const auto& [reason, count] : run.stats) stats[std::string(to_string(reason))] = count;
    j["rejected"] = stats;
    if (!run.per_level_accepted.empty()) {
        Json levels = Json::object();
        for (const auto& [level, count] : run.per_level_accepted) {
            levels[std::string(to_string(level))] = count;
        }
        j["per_level_accepted"] = std::move(levels);
    }
    if (!run.underfilled.empty()) {
        Json shortfalls = Json::object();
        for (const auto& [level, shortfall] : run.underfilled) {
            shortfalls[std::string(to_string(level))] = shortfall;
        }
        j["underfilled"] = std::move(shortfalls);
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

namespace {

bool is_refusal(const std::string& raw) {
    std::string t = trim(raw);
    if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') ||
                          (t.front() == '\'' && t.back() == '\''))) {
        t = trim(t.substr(1, t.size() - 2));
    }
    return to_lower(t) == "none";
}

/// First balanced JSON object in the text, honoring string literals.
std::optional<std::string> first_json_object(const std::string& text) {
    std::size_t search_from = 0;
    while (true) {
        const std::size_t start = text.find('{', search_from);
        if (start == std::string::npos) return std::nullopt;
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) {
                    return text.substr(start, i - start + 1);
                }
            }
        }
        search_from = start + 1;
    }
}

std::string normalize_key(std::string_view key) {
    std::string out;
    for (char c : key) {
        if (c == '_' || c == ' ' || c == '-') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

const OrderedJson* find_key(const OrderedJson& object, std::string_view wanted) {
    const std::string target = normalize_key(wanted);
    for (auto it = object.begin(); it != object.end(); ++it) {
        if (normalize_key(it.key()) == target) return &it.value();
    }
    return nullptr;
}

std::optional<Sample> map_candidate(const OrderedJson& object, const TaskSpec& task,
                                    std::string& error) {
    Sample sample;
    sample.task_id = task.task_id;

    // Extend-style payloads take precedence: they are unambiguous.
    const OrderedJson* question = find_key(object, "question");
    const OrderedJson* ref_answer = find_key(object, "ref_answer");
    if (question != nullptr && ref_answer != nullptr && question->is_string()) {
        sample.input_text = question->get<std::string>();
        sample.answer.kind = AnswerKind::FreeResponse;
        sample.answer.reference = ref_answer->is_string()
                                      ? ref_answer->get<std::string>()
                                      : ref_answer->dump();
        if (trim(sample.answer.reference).empty()) {
            error = "empty ref_answer";
            return std::nullopt;
        }
        return sample;
    }

    switch (task.answer_kind) {
        case AnswerKind::TargetScores: {
            const OrderedJson* input = find_key(object, "input");
            const OrderedJson* scores = find_key(object, "target_scores");
            if (input == nullptr || !input->is_string() || scores == nullptr ||
                !scores->is_object()) {
                error = "expected {\"input\", \"target_scores\"}";
                return std::nullopt;
            }
            sample.input_text = input->get<std::string>();
            sample.answer.kind = AnswerKind::TargetScores;
            std::size_t winners = 0;
            for (auto it = scores->begin(); it != scores->end(); ++it) {
                if (!it.value().is_number()) {
                    error = "non-numeric target score";
                    return std::nullopt;
                }
                const int score = it.value().get<double>() >= 0.5 ? 1 : 0;
                winners += score;
                sample.answer.target_scores.emplace_back(it.key(), score);
            }
            if (winners != 1) {
                error = "target_scores must have exactly one score-1 option";
                return std::nullopt;
            }
            if (const OrderedJson* hint = find_key(object, "hint");
                hint != nullptr && hint->is_string()) {
                sample.answer.hint = hint->get<std::string>();
            }
            return sample;
        }
        case AnswerKind::MultipleChoice: {
            const OrderedJson* q = find_key(object, "question");
            if (q == nullptr) q = find_key(object, "input");
            const OrderedJson* answer = find_key(object, "answer");
            if (q == nullptr || !q->is_string() || answer == nullptr || !answer->is_string()) {
                error = "expected {\"question\", options, \"answer\"}";
                return std::nullopt;
            }
            sample.input_text = q->get<std::string>();
            sample.answer.kind = AnswerKind::MultipleChoice;
            static const char* kLetters[] = {"A", "B", "C", "D"};
            for (const char* letter : kLetters) {
                const OrderedJson* text = find_key(object, letter);
                if (text == nullptr || !text->is_string()) break;
                sample.answer.options.emplace_back(letter, text->get<std::string>());
            }
            if (sample.answer.options.size() < 2) {
                error = "fewer than two lettered options";
                return std::nullopt;
            }
            const std::string letter = trim(answer->get<std::string>());
            bool known = false;
            for (const auto& [l, text] : sample.answer.options) known |= l == letter;
            if (!known) {
                error = "answer letter \"" + letter + "\" not among the options";
                return std::nullopt;
            }
            sample.answer.answer_letter = letter;
            return sample;
        }
        case AnswerKind::FreeResponse: {
            const OrderedJson* input = find_key(object, "input");
            if (input == nullptr) input = find_key(object, "question");
            const OrderedJson* target = find_key(object, "target");
            if (target == nullptr) target = find_key(object, "target_scores");
            if (target == nullptr) target = find_key(object, "ref_answer");
            if (input == nullptr || !input->is_string() || target == nullptr ||
                !target->is_string()) {
                error = "expected {\"input\", \"target\"}";
                return std::nullopt;
            }
            sample.input_text = input->get<std::string>();
            sample.answer.kind = AnswerKind::FreeResponse;
            sample.answer.reference = target->get<std::string>();
            if (trim(sample.answer.reference).empty()) {
                error = "empty reference answer";
                return std::nullopt;
            }
            return sample;
        }
    }
    error = "unsupported answer kind";
    return std::nullopt;
}

}  // namespace

CandidateSample parse_generated_sample(const std::string& raw, const TaskSpec& task) {
    CandidateSample candidate;
    candidate.raw_response = raw;
    if (is_refusal(raw)) {
        candidate.refused = true;
        return candidate;
    }
    auto object_text = first_json_object(raw);
    if (!object_text) return candidate;

    OrderedJson object;
    try {
        object = OrderedJson::parse(*object_text);
    } catch (const OrderedJson::parse_error&) {
        return candidate;
    }
    if (!object.is_object()) return candidate;

    std::string error;
    candidate.sample = map_candidate(object, task, error);
    return candidate;
}

// ---------------------------------------------------------------------------
// Mimic
// ---------------------------------------------------------------------------

namespace {

struct SeedOutcome {
    CandidateSample candidate;
    bool backend_failed = false;
    std::string backend_error;
    ValidationVerdict verdict = ValidationVerdict::ok();
};

RejectReason reason_from_verdict(VerdictReason reason) {
    switch (reason) {
        case VerdictReason::WrongAnswer: return RejectReason::WrongAnswer;
        case VerdictReason::Unparseable: return RejectReason::Unparseable;
        case VerdictReason::SelfCheckFailed: return RejectReason::SelfCheckFailed;
        case VerdictReason::Duplicate: return RejectReason::Duplicate;
        case VerdictReason::Ok: break;
    }
    return RejectReason::ParseFailure;
}

}  // namespace

GenerationRun mimic_update(const DatasetSnapshot& source, const GenerationConfig& config,
                           Gateway& gateway) {
    GenerationRun run;
    run.strategy = UpdateStrategy::Mimic;
    run.iteration = config.iteration;

    std::size_t seed_count = source.samples.size();
    if (config.seed_limit > 0) seed_count = std::min(seed_count, config.seed_limit);

    std::vector<SeedOutcome> outcomes(seed_count);
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= seed_count) return;
            SeedOutcome& outcome = outcomes[i];
            const Sample& seed = source.samples[i];
            try {
                ChatRequest request;
                request.prompt = render_mimic_prompt(source.task, seed);
                request.model_name = config.generator_model;
                request.temperature = 0.0;
                request.max_tokens = 512;
                request.tag = "mimic";

                ChatResponse response = gateway.complete(request);
                outcome.candidate = parse_generated_sample(response.text, source.task);
                if (!outcome.candidate.refused && !outcome.candidate.sample) {
                    // One retry before rejecting the seed for a parse failure.
                    response = gateway.complete(request);
                    outcome.candidate = parse_generated_sample(response.text, source.task);
                }
                if (outcome.candidate.sample) {
                    outcome.verdict = validate_sample(*outcome.candidate.sample, source.task,
                                                      gateway, config.generator_model);
                }
            } catch (const Error& e) {
                outcome.backend_failed = true;
                outcome.backend_error = e.what();
            }
        }
    };

    const std::size_t thread_count =
        std::max<std::size_t>(1, std::min<std::size_t>(gateway.config().max_concurrency,
                                                       seed_count));
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();

    // Serial admission in seed order keeps acceptance deterministic.
    std::vector<Sample> dedup_pool;
    dedup_pool.reserve(source.samples.size() + config.dedup_against.size());
    for (const Sample& original : source.samples) dedup_pool.push_back(original);
    for (const Sample& prior : config.dedup_against) dedup_pool.push_back(prior);

    run.issued = seed_count;
    for (std::size_t i = 0; i < seed_count; ++i) {
        SeedOutcome& outcome = outcomes[i];
        if (outcome.backend_failed) {
            ++run.stats[RejectReason::BackendFailure];
            run.rejected.push_back(
                {std::move(outcome.candidate), RejectReason::BackendFailure, outcome.backend_error});
            continue;
        }
        if (outcome.candidate.refused) {
            ++run.refused;
            continue;
        }
        if (!outcome.candidate.sample) {
            ++run.stats[RejectReason::ParseFailure];
            run.rejected.push_back(
                {std::move(outcome.candidate), RejectReason::ParseFailure, "no usable JSON object"});
            continue;
        }
        if (!outcome.verdict.pass) {
            const RejectReason reason = reason_from_verdict(outcome.verdict.reason);
            ++run.stats[reason];
            run.rejected.push_back({std::move(outcome.candidate), reason, outcome.verdict.detail});
            continue;
        }
        ValidationVerdict dedup =
            dedup_filter(*outcome.candidate.sample, dedup_pool, config.dedup_threshold);
        if (!dedup.pass) {
            ++run.stats[RejectReason::Duplicate];
            run.rejected.push_back({std::move(outcome.candidate), RejectReason::Duplicate,
                                    dedup.detail});
            continue;
        }
        Sample accepted = std::move(*outcome.candidate.sample);
        accepted.origin = SampleOrigin::Mimicked;
        accepted.iteration = config.iteration;
        accepted.seed_ref = source.samples[i].id;
        accepted.id = make_sample_id(source.task.task_id, config.id_offset + run.accepted.size(),
                                     accepted.input_text, accepted.answer);
        dedup_pool.push_back(accepted);
        run.accepted.push_back(std::move(accepted));
    }
    return run;
}

// ---------------------------------------------------------------------------
// Extend
// ---------------------------------------------------------------------------

GenerationRun extend_update(const std::vector<Seed>& seeds, const LevelPlan& plan,
                            const TaskSpec& task, const GenerationConfig& config,
                            Gateway& gateway) {
    if (seeds.empty()) throw Error("extend_update requires at least one seed");

    GenerationRun run;
    run.strategy = UpdateStrategy::Extend;
    run.iteration = config.iteration;

    for (CognitiveLevel level : kAllLevels) {
        auto quota_it = plan.per_level_count.find(level);
        if (quota_it == plan.per_level_count.end() || quota_it->second == 0) continue;
        const std::size_t quota = quota_it->second;
        std::size_t& accepted_here = run.per_level_accepted[level];

        for (std::size_t s = 0; s < seeds.size() && accepted_here < quota; ++s) {
            const Seed& seed = seeds[s];
            ++run.issued;
            CandidateSample candidate;
            try {
                ChatRequest request;
                request.prompt = render_extend_prompt(level, seed);
                request.model_name = config.generator_model;
                request.temperature = 0.0;
                request.max_tokens = 512;
                request.tag = "extend";

                ChatResponse response = gateway.complete(request);
                candidate = parse_generated_sample(response.text, task);
                if (!candidate.refused && !candidate.sample) {
                    response = gateway.complete(request);
                    candidate = parse_generated_sample(response.text, task);
                }
            } catch (const Error& e) {
                ++run.stats[RejectReason::BackendFailure];
                run.rejected.push_back({std::move(candidate), RejectReason::BackendFailure,
                                        e.what()});
                continue;
            }
            if (candidate.refused) {
                ++run.refused;
                continue;
            }
            if (!candidate.sample) {
                ++run.stats[RejectReason::ParseFailure];
                run.rejected.push_back(
                    {std::move(candidate), RejectReason::ParseFailure, "no usable JSON object"});
                continue;
            }
            ValidationVerdict dedup = dedup_filter(*candidate.sample, config.dedup_against,
                                                   config.dedup_threshold);
            if (!dedup.pass) {
                ++run.stats[RejectReason::Duplicate];
                run.rejected.push_back(
                    {std::move(candidate), RejectReason::Duplicate, dedup.detail});
                continue;
            }
            Sample accepted = std::move(*candidate.sample);
            accepted.origin = SampleOrigin::Extended;
            accepted.level = level;
            accepted.seed_ref = seed.id;
            accepted.iteration = config.iteration;
            accepted.id = make_sample_id(task.task_id, config.id_offset + run.accepted.size(),
                                         accepted.input_text, accepted.answer);
            run.accepted.push_back(std::move(accepted));
            ++accepted_here;
        }
        if (accepted_here < quota) {
            run.underfilled.emplace_back(level, quota - accepted_here);
        }
    }
    return run;
}

// ---------------------------------------------------------------------------
// Iteration driver
// ---------------------------------------------------------------------------

DatasetSnapshot iterate_to_target(const TaskSpec& task, UpdateStrategy strategy,
                                  const UpdateFn& update_fn, std::size_t target_size,
                                  std::uint32_t max_iterations) {
    DatasetSnapshot snapshot;
    snapshot.task = task;
    snapshot.strategy = strategy;
    snapshot.created_at = now_epoch_seconds();
    snapshot.iteration_count = 0;

    if (target_size == 0) return snapshot;

    std::vector<Sample> accumulated;
    for (std::uint32_t iteration = 1; iteration <= max_iterations; ++iteration) {
        GenerationRun run = update_fn(iteration, accumulated);
        for (Sample& sample : run.accepted) accumulated.push_back(std::move(sample));
        snapshot.iteration_count = iteration;
        if (accumulated.size() >= target_size) break;
    }
    if (accumulated.size() > target_size) accumulated.resize(target_size);
    if (accumulated.size() < target_size) {
        snapshot.shortfall = static_cast<std::uint32_t>(target_size - accumulated.size());
    }
    snapshot.samples = std::move(accumulated);
    return snapshot;
}

// ---------------------------------------------------------------------------
// Rationales
// ---------------------------------------------------------------------------

namespace {

std::string extract_explanation(const std::string& text) {
    static const std::regex marker_re(R"(#{2,}\s*Explanation\s*#{2,})", std::regex::icase);
    std::smatch match;
    if (!std::regex_search(text, match, marker_re)) return trim(text);
    const std::size_t body_start = static_cast<std::size_t>(match.position(0) + match.length(0));
    static const std::regex next_marker_re(R"(#{2,}\s*\w+\s*#{2,})");
    const std::string rest = text.substr(body_start);
    std::smatch next;
    if (std::regex_search(rest, next, next_marker_re)) {
        return trim(rest.substr(0, static_cast<std::size_t>(next.position(0))));
    }
    return trim(rest);
}

}  // namespace

std::string generate_rationale(const Sample& sample, Gateway& gateway,
                               const std::string& model_name) {
    const std::string answer = sample.answer.kind == AnswerKind::MultipleChoice
                                   ? sample.answer.answer_letter + ". " +
                                         sample.answer.correct_text()
                                   : sample.answer.correct_text();
    ChatRequest request;
    request.prompt = render_rationale_prompt(render_question_with_options(sample), answer);
    request.model_name = model_name;
    request.temperature = 0.0;
    request.max_tokens = 512;
    request.tag = "rationale";
    const ChatResponse response = gateway.complete(request);
    return extract_explanation(response.text);
}

std::vector<std::string> generate_rationales(const std::vector<Sample>& samples, Gateway& gateway,
                                             const std::string& model_name) {
    std::vector<std::string> rationales;
    rationales.reserve(samples.size());
    for (const Sample& sample : samples) {
        rationales.push_back(generate_rationale(sample, gateway, model_name));
    }
    return rationales;
}

}  // namespace benchup

#include "benchup/corpus.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "benchup/errors.hpp"
#include "benchup/util.hpp"

namespace benchup {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::string_view to_string(AnswerKind kind) {
    switch (kind) {
        case AnswerKind::TargetScores: return "target_scores";
        case AnswerKind::MultipleChoice: return "multiple_choice";
        case AnswerKind::FreeResponse: return "free_response";
    }
    return "free_response";
}

std::string_view to_string(SampleOrigin origin) {
    switch (origin) {
        case SampleOrigin::Original: return "original";
        case SampleOrigin::Mimicked: return "mimicked";
        case SampleOrigin::Extended: return "extended";
    }
    return "original";
}

std::string_view to_string(UpdateStrategy strategy) {
    switch (strategy) {
        case UpdateStrategy::None: return "none";
        case UpdateStrategy::Mimic: return "mimic";
        case UpdateStrategy::Extend: return "extend";
    }
    return "none";
}

std::string_view to_string(CognitiveLevel level) {
    switch (level) {
        case CognitiveLevel::RememberUnderstand: return "remember_understand";
        case CognitiveLevel::Apply: return "apply";
        case CognitiveLevel::Analysis: return "analysis";
        case CognitiveLevel::Evaluation: return "evaluation";
    }
    return "remember_understand";
}

std::optional<CognitiveLevel> cognitive_level_from_string(std::string_view name) {
    for (CognitiveLevel level : kAllLevels) {
        if (to_string(level) == name) return level;
    }
    return std::nullopt;
}

namespace {

AnswerKind answer_kind_from_string(const std::string& name) {
    if (name == "target_scores") return AnswerKind::TargetScores;
    if (name == "multiple_choice") return AnswerKind::MultipleChoice;
    if (name == "free_response") return AnswerKind::FreeResponse;
    throw FormatError("unknown answer kind: " + name);
}

SampleOrigin origin_from_string(const std::string& name) {
    if (name == "original") return SampleOrigin::Original;
    if (name == "mimicked") return SampleOrigin::Mimicked;
    if (name == "extended") return SampleOrigin::Extended;
    throw FormatError("unknown sample origin: " + name);
}

UpdateStrategy strategy_from_string(const std::string& name) {
    if (name == "none") return UpdateStrategy::None;
    if (name == "mimic") return UpdateStrategy::Mimic;
    if (name == "extend") return UpdateStrategy::Extend;
    throw FormatError("unknown strategy: " + name);
}

std::string canonical_answer_text(const AnswerSpec& answer) {
    std::ostringstream out;
    out << to_string(answer.kind);
    for (const auto& [option, score] : answer.target_scores) out << '\x1f' << option << '=' << score;
    for (const auto& [letter, text] : answer.options) out << '\x1f' << letter << ')' << text;
    out << '\x1f' << answer.answer_letter << '\x1f' << answer.reference;
    if (answer.hint) out << '\x1f' << *answer.hint;
    return out.str();
}

}  // namespace

namespace {

/// Shape checks shared by the parsers and the snapshot reader. The error
/// text is prefixed by the caller with file/row context.
std::optional<std::string> answer_violation(const AnswerSpec& answer) {
    switch (answer.kind) {
        case AnswerKind::TargetScores: {
            int winners = 0;
            for (const auto& [option, score] : answer.target_scores) winners += score == 1;
            if (winners != 1) return "target_scores must have exactly one score-1 option";
            break;
        }
        case AnswerKind::MultipleChoice: {
            std::unordered_set<std::string> letters;
            bool known = false;
            for (const auto& [letter, text] : answer.options) {
                if (!letters.insert(letter).second) return "duplicate option letter " + letter;
                known |= letter == answer.answer_letter;
            }
            if (!known) return "answer letter \"" + answer.answer_letter + "\" not among options";
            break;
        }
        case AnswerKind::FreeResponse:
            if (trim(answer.reference).empty()) return "empty reference answer";
            break;
    }
    return std::nullopt;
}

std::optional<std::string> sample_violation(const Sample& sample) {
    if (sample.origin == SampleOrigin::Original &&
        (sample.iteration != 0 || sample.seed_ref.has_value())) {
        return "original samples carry iteration 0 and no seed_ref";
    }
    if (sample.origin == SampleOrigin::Extended && !sample.level.has_value()) {
        return "extended samples carry a cognitive level";
    }
    return answer_violation(sample.answer);
}

}  // namespace

std::string AnswerSpec::correct_text() const {
    switch (kind) {
        case AnswerKind::TargetScores:
            for (const auto& [option, score] : target_scores) {
                if (score == 1) return option;
            }
            return {};
        case AnswerKind::MultipleChoice:
            for (const auto& [letter, text] : options) {
                if (letter == answer_letter) return text;
            }
            return {};
        case AnswerKind::FreeResponse:
            return reference;
    }
    return {};
}

TaskSpec default_task_spec(const std::string& task_id, std::string description,
                           AnswerKind answer_kind) {
    TaskSpec task;
    task.task_id = task_id;
    task.description = std::move(description);
    task.answer_kind = answer_kind;
    const std::string id = to_lower(task_id);
    auto has = [&](std::string_view needle) { return id.find(needle) != std::string::npos; };
    if (has("math") || has("elementary_math")) {
        task.validation = ValidationMethod::ProgramCheck;
        task.program_checker = ProgramChecker::MathHint;
    } else if (has("cs_algorithms") || has("lcs") || has("algos")) {
        task.validation = ValidationMethod::ProgramCheck;
        task.program_checker = ProgramChecker::LcsLength;
    } else if (has("periodic") || has("element")) {
        task.validation = ValidationMethod::ProgramCheck;
        task.program_checker = ProgramChecker::PeriodicElement;
    } else {
        task.validation = ValidationMethod::ModelSelfCheck;
    }
    return task;
}

std::string make_sample_id(const std::string& task_id, std::size_t index,
                           const std::string& input_text, const AnswerSpec& answer) {
    char padded[16];
    std::snprintf(padded, sizeof(padded), "%05zu", index);
    return task_id + "/" + padded + "/" +
           short_hash(input_text + '\x1f' + canonical_answer_text(answer));
}

// ---------------------------------------------------------------------------
// BIG-bench
// ---------------------------------------------------------------------------

DatasetSnapshot parse_bigbench_task(std::string_view bytes, const std::string& task_id) {
    OrderedJson doc;
    try {
        doc = OrderedJson::parse(bytes);
    } catch (const OrderedJson::parse_error& e) {
        throw ParseError(std::string("malformed task JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("examples") || !doc["examples"].is_array()) {
        throw SchemaError("task file has no \"examples\" array");
    }

    std::string effective_task_id = task_id;
    if (doc.contains("name") && doc["name"].is_string() && !doc["name"].get<std::string>().empty()) {
        effective_task_id = doc["name"].get<std::string>();
    }
    std::string description;
    if (doc.contains("description") && doc["description"].is_string()) {
        description = doc["description"].get<std::string>();
    }

    DatasetSnapshot snapshot;
    snapshot.created_at = now_epoch_seconds();
    snapshot.strategy = UpdateStrategy::None;
    snapshot.iteration_count = 1;

    AnswerKind kind = AnswerKind::FreeResponse;
    bool kind_seen = false;

    const auto& examples = doc["examples"];
    snapshot.samples.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        if (!ex.is_object() || !ex.contains("input")) {
            throw SchemaError("example " + std::to_string(i) + " lacks \"input\"");
        }
        Sample sample;
        sample.task_id = effective_task_id;
        sample.input_text = ex["input"].get<std::string>();
        sample.origin = SampleOrigin::Original;
        sample.iteration = 0;

        if (ex.contains("target_scores") && ex["target_scores"].is_object()) {
            sample.answer.kind = AnswerKind::TargetScores;
            for (auto it = ex["target_scores"].begin(); it != ex["target_scores"].end(); ++it) {
                sample.answer.target_scores.emplace_back(
                    it.key(), it.value().get<double>() >= 0.5 ? 1 : 0);
            }
        } else if (ex.contains("target_scores") && ex["target_scores"].is_string()) {
            // A few source tasks label free-response answers under this key.
            sample.answer.kind = AnswerKind::FreeResponse;
            sample.answer.reference = ex["target_scores"].get<std::string>();
        } else if (ex.contains("target")) {
            sample.answer.kind = AnswerKind::FreeResponse;
            if (ex["target"].is_string()) {
                sample.answer.reference = ex["target"].get<std::string>();
            } else if (ex["target"].is_array() && !ex["target"].empty()) {
                sample.answer.reference = ex["target"][0].get<std::string>();
            } else {
                throw SchemaError("example " + std::to_string(i) + " has an unusable \"target\"");
            }
        } else {
            throw SchemaError("example " + std::to_string(i) +
                              " lacks both \"target_scores\" and \"target\"");
        }
        if (ex.contains("hint") && ex["hint"].is_string()) {
            sample.answer.hint = ex["hint"].get<std::string>();
        }
        if (auto violation = answer_violation(sample.answer)) {
            throw SchemaError("example " + std::to_string(i) + ": " + *violation);
        }
        sample.id = make_sample_id(effective_task_id, i, sample.input_text, sample.answer);
        if (!kind_seen) {
            kind = sample.answer.kind;
            kind_seen = true;
        }
        snapshot.samples.push_back(std::move(sample));
    }

    snapshot.task = default_task_spec(effective_task_id, std::move(description), kind);
    return snapshot;
}

// ---------------------------------------------------------------------------
// MMLU CSV
// ---------------------------------------------------------------------------

namespace {

/// Splits CSV content into rows of cells. Quoted cells may contain commas,
/// doubled quotes, and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view bytes) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool cell_started = false;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        char c = bytes[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                cell_started = true;
                break;
            case ',':
                row.push_back(std::move(cell));
                cell.clear();
                cell_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (!row.empty() || !cell.empty() || cell_started) {
                    row.push_back(std::move(cell));
                    cell.clear();
                    rows.push_back(std::move(row));
                    row.clear();
                }
                cell_started = false;
                break;
            default:
                cell.push_back(c);
                cell_started = true;
                break;
        }
    }
    if (in_quotes) {
        throw ParseError("unbalanced quotes in CSV", bytes.size());
    }
    if (!cell.empty() || !row.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

bool is_answer_letter(const std::string& cell) {
    const std::string t = trim(cell);
    return t.size() == 1 && t[0] >= 'A' && t[0] <= 'D';
}

}  // namespace

DatasetSnapshot parse_mmlu_rows(std::string_view bytes, const std::string& task_id) {
    auto rows = parse_csv(bytes);

    DatasetSnapshot snapshot;
    snapshot.created_at = now_epoch_seconds();
    snapshot.strategy = UpdateStrategy::None;
    snapshot.iteration_count = 1;
    snapshot.task = default_task_spec(task_id, "", AnswerKind::MultipleChoice);

    std::size_t start = 0;
    // Header iff the first row's last cell is not a single letter A-D.
    if (!rows.empty() && !rows[0].empty() && !is_answer_letter(rows[0].back())) {
        start = 1;
    }

    static const char* kLetters[] = {"A", "B", "C", "D"};
    for (std::size_t r = start; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() != 6) {
            throw SchemaError("row " + std::to_string(r + 1) + " has " +
                              std::to_string(cells.size()) + " cells, expected 6");
        }
        const std::string letter = trim(cells[5]);
        if (!is_answer_letter(letter)) {
            throw SchemaError("row " + std::to_string(r + 1) + " has answer letter \"" +
                              letter + "\" outside A-D");
        }
        Sample sample;
        sample.task_id = task_id;
        sample.input_text = cells[0];
        sample.answer.kind = AnswerKind::MultipleChoice;
        for (int k = 0; k < 4; ++k) {
            sample.answer.options.emplace_back(kLetters[k], cells[static_cast<std::size_t>(k) + 1]);
        }
        sample.answer.answer_letter = letter;
        sample.origin = SampleOrigin::Original;
        sample.iteration = 0;
        if (auto violation = answer_violation(sample.answer)) {
            throw SchemaError("row " + std::to_string(r + 1) + ": " + *violation);
        }
        sample.id = make_sample_id(task_id, snapshot.samples.size(), sample.input_text, sample.answer);
        snapshot.samples.push_back(std::move(sample));
    }
    return snapshot;
}

// ---------------------------------------------------------------------------
// Snapshot persistence
// ---------------------------------------------------------------------------

namespace {

Json answer_to_json(const AnswerSpec& answer) {
    Json j;
    j["kind"] = std::string(to_string(answer.kind));
    switch (answer.kind) {
        case AnswerKind::TargetScores: {
            Json scores = Json::array();
            for (const auto& [option, score] : answer.target_scores) {
                scores.push_back(Json::array({option, score}));
            }
            j["target_scores"] = std::move(scores);
            break;
        }
        case AnswerKind::MultipleChoice: {
            Json options = Json::array();
            for (const auto& [letter, text] : answer.options) {
                options.push_back(Json::array({letter, text}));
            }
            j["options"] = std::move(options);
            j["answer_letter"] = answer.answer_letter;
            break;
        }
        case AnswerKind::FreeResponse:
            j["reference"] = answer.reference;
            break;
    }
    if (answer.hint) j["hint"] = *answer.hint;
    return j;
}

AnswerSpec answer_from_json(const Json& j) {
    AnswerSpec answer;
    answer.kind = answer_kind_from_string(j.at("kind").get<std::string>());
    switch (answer.kind) {
        case AnswerKind::TargetScores:
            for (const auto& entry : j.at("target_scores")) {
                answer.target_scores.emplace_back(entry.at(0).get<std::string>(),
                                                  entry.at(1).get<int>());
            }
            break;
        case AnswerKind::MultipleChoice:
            for (const auto& entry : j.at("options")) {
                answer.options.emplace_back(entry.at(0).get<std::string>(),
                                            entry.at(1).get<std::string>());
            }
            answer.answer_letter = j.at("answer_letter").get<std::string>();
            break;
        case AnswerKind::FreeResponse:
            answer.reference = j.at("reference").get<std::string>();
            break;
    }
    if (j.contains("hint")) answer.hint = j.at("hint").get<std::string>();
    return answer;
}

Json sample_to_json(const Sample& sample) {
    Json j;
    j["id"] = sample.id;
    j["task_id"] = sample.task_id;
    j["input"] = sample.input_text;
    j["answer"] = answer_to_json(sample.answer);
    if (sample.level) j["level"] = std::string(to_string(*sample.level));
    if (sample.seed_ref) j["seed_ref"] = *sample.seed_ref;
    j["origin"] = std::string(to_string(sample.origin));
    j["iteration"] = sample.iteration;
    return j;
}

Sample sample_from_json(const Json& j) {
    Sample sample;
    sample.id = j.at("id").get<std::string>();
    sample.task_id = j.at("task_id").get<std::string>();
    sample.input_text = j.at("input").get<std::string>();
    sample.answer = answer_from_json(j.at("answer"));
    if (j.contains("level")) {
        auto level = cognitive_level_from_string(j.at("level").get<std::string>());
        if (!level) throw FormatError("unknown cognitive level: " + j.at("level").get<std::string>());
        sample.level = *level;
    }
    if (j.contains("seed_ref")) sample.seed_ref = j.at("seed_ref").get<std::string>();
    sample.origin = origin_from_string(j.at("origin").get<std::string>());
    sample.iteration = j.at("iteration").get<std::uint32_t>();
    return sample;
}

Json task_to_json(const TaskSpec& task) {
    Json j;
    j["task_id"] = task.task_id;
    j["description"] = task.description;
    j["answer_kind"] = std::string(to_string(task.answer_kind));
    j["validation"] = task.validation == ValidationMethod::ProgramCheck ? "program_check"
                                                                        : "model_self_check";
    if (task.program_checker) {
        switch (*task.program_checker) {
            case ProgramChecker::MathHint: j["program_checker"] = "math_hint"; break;
            case ProgramChecker::LcsLength: j["program_checker"] = "lcs_length"; break;
            case ProgramChecker::PeriodicElement: j["program_checker"] = "periodic_element"; break;
        }
    }
    return j;
}

TaskSpec task_from_json(const Json& j) {
    TaskSpec task;
    task.task_id = j.at("task_id").get<std::string>();
    task.description = j.at("description").get<std::string>();
    task.answer_kind = answer_kind_from_string(j.at("answer_kind").get<std::string>());
    const std::string validation = j.at("validation").get<std::string>();
    task.validation = validation == "program_check" ? ValidationMethod::ProgramCheck
                                                    : ValidationMethod::ModelSelfCheck;
    if (j.contains("program_checker")) {
        const std::string checker = j.at("program_checker").get<std::string>();
        if (checker == "math_hint") task.program_checker = ProgramChecker::MathHint;
        else if (checker == "lcs_length") task.program_checker = ProgramChecker::LcsLength;
        else if (checker == "periodic_element") task.program_checker = ProgramChecker::PeriodicElement;
        else throw FormatError("unknown program checker: " + checker);
    }
    return task;
}

}  // namespace

std::string write_snapshot(const DatasetSnapshot& snapshot) {
    Json header;
    header["format"] = "benchup.snapshot.v1";
    header["task"] = task_to_json(snapshot.task);
    header["created_at"] = epoch_to_iso8601(snapshot.created_at);
    header["strategy"] = std::string(to_string(snapshot.strategy));
    header["iteration_count"] = snapshot.iteration_count;
    if (snapshot.shortfall > 0) header["shortfall"] = snapshot.shortfall;

    std::ostringstream out;
    out << header.dump() << '\n';
    for (const Sample& sample : snapshot.samples) {
        out << sample_to_json(sample).dump() << '\n';
    }
    return out.str();
}

DatasetSnapshot read_snapshot(std::string_view bytes) {
    auto lines = split_lines(bytes);
    if (lines.empty() || trim(lines[0]).empty()) {
        throw FormatError("snapshot header line missing");
    }
    Json header;
    try {
        header = Json::parse(lines[0]);
    } catch (const Json::parse_error& e) {
        throw FormatError(std::string("snapshot header is not valid JSON: ") + e.what());
    }
    if (!header.is_object() || !header.contains("task")) {
        throw FormatError("snapshot header line missing");
    }

    DatasetSnapshot snapshot;
    try {
        snapshot.task = task_from_json(header.at("task"));
        snapshot.created_at = iso8601_to_epoch(header.at("created_at").get<std::string>());
        snapshot.strategy = strategy_from_string(header.at("strategy").get<std::string>());
        snapshot.iteration_count = header.at("iteration_count").get<std::uint32_t>();
        if (header.contains("shortfall")) {
            snapshot.shortfall = header.at("shortfall").get<std::uint32_t>();
        }
    } catch (const Json::exception& e) {
        throw FormatError(std::string("snapshot header is malformed: ") + e.what());
    }

    std::unordered_set<std::string> seen_ids;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        Json record;
        Sample sample;
        try {
            record = Json::parse(lines[i]);
            sample = sample_from_json(record);
        } catch (const Json::exception& e) {
            throw FormatError("snapshot line " + std::to_string(i + 1) + " is malformed: " +
                              e.what());
        }
        if (!seen_ids.insert(sample.id).second) {
            throw IntegrityError("duplicate sample id: " + sample.id);
        }
        if (sample.task_id != snapshot.task.task_id) {
            throw IntegrityError("sample " + sample.id + " belongs to task " + sample.task_id +
                                 ", snapshot is " + snapshot.task.task_id);
        }
        if (auto violation = sample_violation(sample)) {
            throw IntegrityError("sample " + sample.id + ": " + *violation);
        }
        snapshot.samples.push_back(std::move(sample));
    }
    return snapshot;
}

// ---------------------------------------------------------------------------
// Fine-tuning exports
// ---------------------------------------------------------------------------

std::string render_question_with_options(const Sample& sample) {
    std::ostringstream out;
    out << sample.input_text;
    switch (sample.answer.kind) {
        case AnswerKind::MultipleChoice:
            out << "\nOptions:";
            for (const auto& [letter, text] : sample.answer.options) {
                out << '\n' << letter << ". " << text;
            }
            out << "\nAnswer with the letter of the correct option.";
            break;
        case AnswerKind::TargetScores:
            out << "\nOptions:";
            for (const auto& [option, score] : sample.answer.target_scores) {
                out << "\n- " << option;
            }
            out << "\nAnswer with one of the options.";
            break;
        case AnswerKind::FreeResponse:
            break;
    }
    return out.str();
}

std::string export_finetune_records(
    const std::vector<std::pair<Sample, std::string>>& samples_with_rationales,
    FinetuneStyle style) {
    std::ostringstream out;
    for (const auto& [sample, rationale] : samples_with_rationales) {
        if (style == FinetuneStyle::WithRationale && trim(rationale).empty()) {
            throw MissingRationaleError("sample " + sample.id + " has no rationale");
        }
        std::string answer;
        if (sample.answer.kind == AnswerKind::MultipleChoice) {
            answer = sample.answer.answer_letter + ". " + sample.answer.correct_text();
        } else {
            answer = sample.answer.correct_text();
        }
        Json record;
        record["instruction"] = render_question_with_options(sample);
        record["output"] =
            style == FinetuneStyle::WithRationale ? answer + "\n" + rationale : answer;
        out << record.dump() << '\n';
    }
    return out.str();
}

}  // namespace benchup

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "benchup/cognitive_level.hpp"

namespace benchup {

enum class AnswerKind { TargetScores, MultipleChoice, FreeResponse };
enum class SampleOrigin { Original, Mimicked, Extended };
enum class ValidationMethod { ModelSelfCheck, ProgramCheck };
enum class ProgramChecker { MathHint, LcsLength, PeriodicElement };
enum class UpdateStrategy { None, Mimic, Extend };

std::string_view to_string(AnswerKind kind);
std::string_view to_string(SampleOrigin origin);
std::string_view to_string(UpdateStrategy strategy);

/// Canonical answer structure. Exactly one of the payload groups is
/// populated, selected by `kind`:
///   TargetScores   -> target_scores (ordered option -> 0/1 score)
///   MultipleChoice -> options + answer_letter
///   FreeResponse   -> reference
/// `hint` rides along for math word problems regardless of kind.
struct AnswerSpec {
    AnswerKind kind = AnswerKind::FreeResponse;
    std::vector<std::pair<std::string, int>> target_scores;  // original option order
    std::vector<std::pair<std::string, std::string>> options;  // (letter, text)
    std::string answer_letter;
    std::string reference;
    std::optional<std::string> hint;

    /// Text of the correct answer: the score-1 option, the answer letter's
    /// option text, or the free-form reference.
    std::string correct_text() const;

    bool operator==(const AnswerSpec&) const = default;
};

struct Sample {
    std::string id;
    std::string task_id;
    std::string input_text;
    AnswerSpec answer;
    std::optional<CognitiveLevel> level;
    std::optional<std::string> seed_ref;
    SampleOrigin origin = SampleOrigin::Original;
    std::uint32_t iteration = 0;

    bool operator==(const Sample&) const = default;
};

struct TaskSpec {
    std::string task_id;
    std::string description;
    AnswerKind answer_kind = AnswerKind::FreeResponse;
    ValidationMethod validation = ValidationMethod::ModelSelfCheck;
    std::optional<ProgramChecker> program_checker;

    bool operator==(const TaskSpec&) const = default;
};

struct DatasetSnapshot {
    TaskSpec task;
    std::vector<Sample> samples;
    std::int64_t created_at = 0;  // epoch seconds, UTC
    UpdateStrategy strategy = UpdateStrategy::None;
    std::uint32_t iteration_count = 1;
    std::uint32_t shortfall = 0;  // samples short of the requested target, if any

    bool operator==(const DatasetSnapshot&) const = default;
};

/// Validation/program-check defaults for the tasks this toolkit ships
/// support for. Unknown task ids fall back to model-self check.
TaskSpec default_task_spec(const std::string& task_id, std::string description,
                           AnswerKind answer_kind);

/// Stable sample id: task_id "/" zero-padded index "/" short content hash.
std::string make_sample_id(const std::string& task_id, std::size_t index,
                           const std::string& input_text, const AnswerSpec& answer);

// ---------------------------------------------------------------------------
// Source-benchmark parsing
// ---------------------------------------------------------------------------

/// Parses a BIG-bench style task file: JSON with an "examples" array whose
/// entries carry "input" plus "target_scores" (object or string) or "target".
DatasetSnapshot parse_bigbench_task(std::string_view bytes, const std::string& task_id);

/// Parses MMLU-style CSV rows: question, A, B, C, D, answer letter. A header
/// row is detected by its last cell not being a single letter A-D.
DatasetSnapshot parse_mmlu_rows(std::string_view bytes, const std::string& task_id);

// ---------------------------------------------------------------------------
// Snapshot persistence (line-delimited JSON, header line first, sorted keys)
// ---------------------------------------------------------------------------

std::string write_snapshot(const DatasetSnapshot& snapshot);
DatasetSnapshot read_snapshot(std::string_view bytes);

// ---------------------------------------------------------------------------
// Fine-tuning exports
// ---------------------------------------------------------------------------

enum class FinetuneStyle { Leakage, WithRationale };

/// Question text plus enumerated options and an answer instruction, as fed
/// to answering models and fine-tune exports. FreeResponse passes through.
std::string render_question_with_options(const Sample& sample);

/// Renders line-delimited {"instruction", "output"} records. WithRationale
/// appends the rationale after the answer, separated by a newline.
std::string export_finetune_records(
    const std::vector<std::pair<Sample, std::string>>& samples_with_rationales,
    FinetuneStyle style);

}  // namespace benchup

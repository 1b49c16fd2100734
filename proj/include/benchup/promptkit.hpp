#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "benchup/corpus.hpp"
#include "benchup/seed.hpp"

namespace benchup {

enum class PromptPurpose { Mimic, Extend, Rationale, Judge, Answer, SelfCheck };

std::string_view to_string(PromptPurpose purpose);

struct RenderedPrompt {
    std::optional<std::string> system_text;
    std::string user_text;
    PromptPurpose purpose = PromptPurpose::Answer;

    bool operator==(const RenderedPrompt&) const = default;
};

/// Named prompt templates with "{{name}}" placeholders. Built-in texts are
/// embedded; any of them can be overridden by a `<id>.txt` file in a
/// directory passed to load_overrides().
class TemplateSet {
public:
    TemplateSet();

    void load_overrides(const std::filesystem::path& dir);

    const std::string& text(const std::string& id) const;

    /// Single-pass substitution. Unknown or unterminated placeholders throw
    /// TemplateError. "{{" inside values is escaped to "{ {" so rendered
    /// output never contains the placeholder opener.
    std::string render(const std::string& id,
                       const std::map<std::string, std::string>& values) const;

    static const TemplateSet& builtin();

private:
    std::map<std::string, std::string> templates_;
};

/// True if the text still contains the placeholder opener "{{".
bool has_unresolved_placeholder(std::string_view text);

/// Serializes a sample the way it appears in its source benchmark file;
/// embedded verbatim in mimic prompts.
std::string seed_sample_json(const Sample& sample);

RenderedPrompt render_mimic_prompt(const TaskSpec& task, const Sample& seed,
                                   const TemplateSet& templates = TemplateSet::builtin());

RenderedPrompt render_extend_prompt(CognitiveLevel level, const Seed& seed,
                                    const TemplateSet& templates = TemplateSet::builtin());

RenderedPrompt render_rationale_prompt(const std::string& question, const std::string& answer,
                                       const TemplateSet& templates = TemplateSet::builtin());

RenderedPrompt render_judge_prompt(const std::string& question, const std::string& reference,
                                   const std::string& candidate,
                                   const TemplateSet& templates = TemplateSet::builtin());

RenderedPrompt render_answer_prompt(const Sample& sample,
                                    const TemplateSet& templates = TemplateSet::builtin());

}  // namespace benchup

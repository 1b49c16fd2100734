#include "benchup/promptkit.hpp"

#include <json.hpp>

#include "benchup/errors.hpp"
#include "benchup/util.hpp"

namespace benchup {

using OrderedJson = nlohmann::ordered_json;

std::string_view to_string(PromptPurpose purpose) {
    switch (purpose) {
        case PromptPurpose::Mimic: return "mimic";
        case PromptPurpose::Extend: return "extend";
        case PromptPurpose::Rationale: return "rationale";
        case PromptPurpose::Judge: return "judge";
        case PromptPurpose::Answer: return "answer";
        case PromptPurpose::SelfCheck: return "self_check";
    }
    return "answer";
}

namespace {

constexpr const char* kMimic =
    R"(You are a question-writer expert.
Please generate one **different** but high-quality sample following the task description.
###Task description###:
{{task_description}}
Here is an example, help me generate one **different** but **similar** one, and guarantee the answer is correct.
{{seed_sample}})";

constexpr const char* kMimicInline =
    R"(You are a question-writer expert. Please mimic the provided examples to generate *one* different but high-quality sample following the task description.
[Task Description]: {{task_description}}
[Seed Sample]: {{seed_sample}}
[New Generated Sample]:)";

constexpr const char* kExtendRememberUnderstand =
    R"(I want you to act as a question writer expert, specializing in the "Remember and Understand" level of cognitive assessment. Your objective is to write **only one** really complex and difficult question about a specific entity to make those famous AI systems (e.g., ChaGPT and GPT4) a bit harder to handle.

[Generate Criterion]
1. The question should be focused on the remember and understand level. This means the question should prompt for recall of facts, terms, and basic concepts, interpret, summarize, and exemplify ideas or concepts. NOT delve into deeper levels like Applying  Analyzing or Evaluation.
2. Ensure that you can confidently answer the questions you are proposing, if you can not answer it correctly or have no related knowledge about the entity please return "None".
3. DO NOT add other words other than the question itself.

{{seed}}

Help me generate the answer also)";

constexpr const char* kExtendApply =
    R"(I want you to act as a question writer expert, specializing in the "Applying" level of cognitive assessment. Your objective is to write **only one** really complex and difficult question about the given statement to make those famous AI systems (e.g., ChaGPT and GPT4) a bit harder to handle.

[Generate Criterion]
1. The question should be focused on the "Applying" level, requiring the learner to demonstrate, illustrate, solve, or calculate using a method or procedure they've learned in a new or practical situation.
2. Ensure that you can confidently answer the questions you are proposing, if you can not answer it correctly or have no related knowledge about the entity please return "None".
3. DO NOT add other words other than the question itself.

{{seed}}

Help me generate the answer also)";

constexpr const char* kExtendAnalysis =
    R"(I want you to act as a question writer expert, specializing in the "Analysing" level of cognitive assessment. Your objective is to write **only one** really complex and difficult question about a given statement to make those famous AI systems (e.g., ChaGPT and GPT4) a bit harder to handle.

[Generate Criterion]
1. The question should be focused on the "Analysing" level, requiring the learner to break information into parts to explore understandings and relationships. It's about asking learners to look into the components, analysis of relationships, and comparison with other entities or concepts.
2. Ensure that you can confidently answer the questions you are proposing, if you can not answer it correctly or have no related knowledge about the entity please return "None".
3. DO NOT add other words other than the question itself.

{{seed}}

Help me generate the answer also)";

constexpr const char* kExtendEvaluation =
    R"(I want you to act as a question writer expert, specializing in the "Evaluation" level of cognitive assessment. Your objective is to write **only one** really complex and difficult question about a specific entity with **an answer** that is difficult to discern, especially for AI systems.

[Generate Criterion]
1. The **answer** provided should be **exceptionally misleading**, making it difficult for even AI systems to differentiate if the answer is correct.
2. Ensure that you can confidently answer the questions you are proposing, if you can not answer it correctly or have no related knowledge about the entity please return "None".
3. DO NOT add other words other than the question itself.

{{seed}}

Help me generate the answer also)";

constexpr const char* kRationale =
    R"(You are a good assistant and always follow my word.

I will get your one ###Question### and one ###Answer###. The answer is always correct.
help me generate an explanation for it return as

### Explanation###
Your Explaanation
###Question### {{question}}
###Answer### {{answer}})";

constexpr const char* kAnswerExtended =
    R"(You are a good assistant, please help me answer the question.

{{question}})";

constexpr const char* kJudge =
    R"(You are a critical assessment expert, and you will be given a set of question-answer pairs. Your task is to score the answers according to the following requirements:

[Evaluation Steps]
a. You should score the answer based on the reference answer.
b. You should rate the answer on 3 metrics, and assign a score between 1 and 3, with 3 being the highest.

[Evaluation Criterion]
1. For accuracy, you will score whether the answer correctly and comprehensively answers the question.
2. For coherence, you will assess the structure and logic of the answer, and whether the answer is understandable by non-professionals.
3. For factuality, you will only evaluate whether the answer contains factual errors.
4. Return in formate:  Accuracy: 1

[Question]
{{question}}

[Reference Answer]
{{reference}}

[Candidate Answer]
{{candidate}})";

std::string escape_value(std::string_view value) {
    std::string out;
    out.reserve(value.size());
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (value[i] == '{' && i + 1 < value.size() && value[i + 1] == '{') {
            out += "{ {";
            ++i;
        } else {
            out.push_back(value[i]);
        }
    }
    return out;
}

const std::string& extend_template_id(CognitiveLevel level) {
    static const std::string ids[] = {
        "extend_remember_understand",
        "extend_apply",
        "extend_analysis",
        "extend_evaluation",
    };
    return ids[static_cast<int>(level)];
}

}  // namespace

TemplateSet::TemplateSet() {
    templates_ = {
        {"mimic", kMimic},
        {"mimic_inline", kMimicInline},
        {"extend_remember_understand", kExtendRememberUnderstand},
        {"extend_apply", kExtendApply},
        {"extend_analysis", kExtendAnalysis},
        {"extend_evaluation", kExtendEvaluation},
        {"rationale", kRationale},
        {"answer_extended", kAnswerExtended},
        {"judge", kJudge},
    };
}

void TemplateSet::load_overrides(const std::filesystem::path& dir) {
    for (auto& [id, text] : templates_) {
        if (auto contents = try_read_file(dir / (id + ".txt"))) {
            text = *contents;
        }
    }
}

const std::string& TemplateSet::text(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw TemplateError("unknown template: " + id);
    return it->second;
}

std::string TemplateSet::render(const std::string& id,
                                const std::map<std::string, std::string>& values) const {
    const std::string& tmpl = text(id);
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        out.append(tmpl, pos, open - pos);
        std::size_t close = tmpl.find("}}", open + 2);
        if (close == std::string::npos) {
            throw TemplateError("unterminated placeholder in template " + id);
        }
        const std::string name = tmpl.substr(open + 2, close - open - 2);
        auto it = values.find(name);
        if (it == values.end()) {
            throw TemplateError("template " + id + " references unknown placeholder {{" + name +
                                "}}");
        }
        out += escape_value(it->second);
        pos = close + 2;
    }
    return out;
}

const TemplateSet& TemplateSet::builtin() {
    static const TemplateSet instance;
    return instance;
}

bool has_unresolved_placeholder(std::string_view text) {
    return text.find("{{") != std::string_view::npos;
}

std::string seed_sample_json(const Sample& sample) {
    OrderedJson j;
    switch (sample.answer.kind) {
        case AnswerKind::TargetScores: {
            j["input"] = sample.input_text;
            if (sample.answer.hint) j["hint"] = *sample.answer.hint;
            OrderedJson scores = OrderedJson::object();
            for (const auto& [option, score] : sample.answer.target_scores) scores[option] = score;
            j["target_scores"] = std::move(scores);
            break;
        }
        case AnswerKind::MultipleChoice: {
            j["question"] = sample.input_text;
            for (const auto& [letter, text] : sample.answer.options) j[letter] = text;
            j["answer"] = sample.answer.answer_letter;
            break;
        }
        case AnswerKind::FreeResponse: {
            j["input"] = sample.input_text;
            j["target"] = sample.answer.reference;
            break;
        }
    }
    return j.dump(4);
}

RenderedPrompt render_mimic_prompt(const TaskSpec& task, const Sample& seed,
                                   const TemplateSet& templates) {
    if (trim(task.description).empty()) {
        throw TemplateError("mimic prompt requires a non-empty task description");
    }
    RenderedPrompt prompt;
    prompt.purpose = PromptPurpose::Mimic;
    prompt.user_text = templates.render("mimic", {
                                                     {"task_description", task.description},
                                                     {"seed_sample", seed_sample_json(seed)},
                                                 });
    return prompt;
}

RenderedPrompt render_extend_prompt(CognitiveLevel level, const Seed& seed,
                                    const TemplateSet& templates) {
    if (trim(seed.text).empty()) {
        throw TemplateError("extend prompt requires a non-empty seed");
    }
    RenderedPrompt prompt;
    prompt.purpose = PromptPurpose::Extend;
    prompt.user_text = templates.render(extend_template_id(level), {{"seed", seed.text}});
    return prompt;
}

RenderedPrompt render_rationale_prompt(const std::string& question, const std::string& answer,
                                       const TemplateSet& templates) {
    if (trim(question).empty() || trim(answer).empty()) {
        throw TemplateError("rationale prompt requires a question and an answer");
    }
    RenderedPrompt prompt;
    prompt.purpose = PromptPurpose::Rationale;
    prompt.user_text =
        templates.render("rationale", {{"question", question}, {"answer", answer}});
    return prompt;
}

RenderedPrompt render_judge_prompt(const std::string& question, const std::string& reference,
                                   const std::string& candidate, const TemplateSet& templates) {
    if (trim(question).empty() || trim(reference).empty() || trim(candidate).empty()) {
        throw TemplateError("judge prompt requires question, reference, and candidate");
    }
    RenderedPrompt prompt;
    prompt.purpose = PromptPurpose::Judge;
    prompt.user_text = templates.render("judge", {
                                                     {"question", question},
                                                     {"reference", reference},
                                                     {"candidate", candidate},
                                                 });
    return prompt;
}

RenderedPrompt render_answer_prompt(const Sample& sample, const TemplateSet& templates) {
    RenderedPrompt prompt;
    prompt.purpose = PromptPurpose::Answer;
    if (sample.origin == SampleOrigin::Extended &&
        sample.answer.kind == AnswerKind::FreeResponse) {
        prompt.user_text = templates.render("answer_extended", {{"question", sample.input_text}});
    } else {
        // Closed-form tasks keep their original-benchmark prompt shape.
        prompt.user_text = render_question_with_options(sample);
    }
    return prompt;
}

}  // namespace benchup

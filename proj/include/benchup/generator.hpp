#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "benchup/corpus.hpp"
#include "benchup/gateway.hpp"
#include "benchup/seed.hpp"

namespace benchup {

struct LevelPlan {
    std::map<CognitiveLevel, std::size_t> per_level_count;

    static LevelPlan uniform(std::size_t per_level);
    std::size_t total() const;
};

struct CandidateSample {
    std::optional<Sample> sample;
    std::string raw_response;
    bool refused = false;
};

enum class RejectReason {
    ParseFailure,
    WrongAnswer,
    Unparseable,
    SelfCheckFailed,
    Duplicate,
    BackendFailure,
};

std::string_view to_string(RejectReason reason);

struct RejectedCandidate {
    CandidateSample candidate;
    RejectReason reason = RejectReason::ParseFailure;
    std::string detail;
};

struct GenerationRun {
    UpdateStrategy strategy = UpdateStrategy::Mimic;
    std::uint32_t iteration = 1;
    std::vector<Sample> accepted;
    std::vector<RejectedCandidate> rejected;
    std::size_t issued = 0;   // prompts issued; one per (seed) or (seed, level)
    std::size_t refused = 0;  // "None" responses; never counted toward quotas
    std::map<RejectReason, std::size_t> stats;
    std::map<CognitiveLevel, std::size_t> per_level_accepted;
    // (level, shortfall) for quotas the seed pool could not fill.
    std::vector<std::pair<CognitiveLevel, std::size_t>> underfilled;
};

std::string run_report_json(const GenerationRun& run);

struct GenerationConfig {
    std::string generator_model = "mock-generator";
    double dedup_threshold = 0.9;
    std::size_t seed_limit = 0;  // mimic: cap on seed samples; 0 = all
    std::uint32_t iteration = 1;
    std::size_t id_offset = 0;  // first index used for accepted-sample ids
    /// Samples accepted by earlier iterations; candidates too close to any
    /// of them are rejected as duplicates.
    std::vector<Sample> dedup_against;
};

/// Parses one model response into a candidate. Finds the first balanced JSON
/// object (prose and code fences tolerated) and maps it onto the task's
/// answer shape; extend responses use {"question", "ref_answer"} with key
/// matching that ignores case and underscores. A bare "None" (optionally
/// quoted) marks a refusal. Unusable responses yield a candidate without a
/// sample, with the raw text retained.
CandidateSample parse_generated_sample(const std::string& raw, const TaskSpec& task);

/// Mimic strategy: one prompt per seed sample, then parse check, answer
/// validation (program or model-self), and duplicate filtering against the
/// originals and prior acceptances, in that order.
GenerationRun mimic_update(const DatasetSnapshot& source, const GenerationConfig& config,
                           Gateway& gateway);

/// Extend strategy: walks seeds round-robin per level until each quota is
/// met or every seed has been tried; refusals never count toward quotas.
GenerationRun extend_update(const std::vector<Seed>& seeds, const LevelPlan& plan,
                            const TaskSpec& task, const GenerationConfig& config,
                            Gateway& gateway);

using UpdateFn =
    std::function<GenerationRun(std::uint32_t iteration, const std::vector<Sample>& prior)>;

/// Repeats an update, accumulating acceptances with cross-iteration dedup
/// (the prior acceptances are handed to each call), until the target size is
/// reached or iterations run out. The result is truncated to the target in
/// acceptance order; any shortfall is recorded on the snapshot.
DatasetSnapshot iterate_to_target(const TaskSpec& task, UpdateStrategy strategy,
                                  const UpdateFn& update_fn, std::size_t target_size,
                                  std::uint32_t max_iterations);

/// Renders the rationale prompt for the sample's question/answer pair and
/// returns the text under the explanation marker (or the whole response when
/// unmarked).
std::string generate_rationale(const Sample& sample, Gateway& gateway,
                               const std::string& model_name);

std::vector<std::string> generate_rationales(const std::vector<Sample>& samples, Gateway& gateway,
                                             const std::string& model_name);

}  // namespace benchup

#include <doctest.h>

#include <map>

#include "benchup/errors.hpp"
#include "benchup/generator.hpp"
#include "benchup/promptkit.hpp"
#include "benchup/util.hpp"

using namespace benchup;

namespace {

const std::string kFixtures = BENCHUP_FIXTURES_DIR;

DatasetSnapshot sports_source() {
    return parse_bigbench_task(read_file(kFixtures + "/tasks/sports_understanding.json"),
                               "sports_understanding");
}

// Generation + self-check script for the two-sample sports fixture.
std::map<std::string, std::string> sports_script() {
    return {
        {"question-writer&&Jamal Murray was perfect from the line",
         R"({"input": "Jamal Murray made 10 three-pointers in a row", "target_scores": {"plausible": 1, "implausible": 0}})"},
        {"question-writer&&Derrick White backhanded a shot",
         R"({"input": "Derrick White blocked four shots in one game", "target_scores": {"plausible": 1, "implausible": 0}})"},
        {"Jamal Murray made 10 three-pointers in a row&&Options", "plausible"},
        {"Derrick White blocked four shots in one game&&Options", "plausible"},
    };
}

GenerationConfig default_gen_config() {
    GenerationConfig config;
    config.generator_model = "mock-generator";
    config.dedup_threshold = 0.9;
    config.iteration = 1;
    return config;
}

void check_stats_reconcile(const GenerationRun& run) {
    std::size_t rejected_total = 0;
    for (const auto& [reason, count] : run.stats) rejected_total += count;
    CHECK(run.issued == run.accepted.size() + run.refused + rejected_total);
    CHECK(rejected_total == run.rejected.size());
    CHECK(run.accepted.size() <= run.issued);
}

std::vector<Seed> twenty_seeds() {
    return read_seed_file(read_file(kFixtures + "/seeds/sports_stars.jsonl"));
}

std::map<std::string, std::string> extend_script() {
    return {
        {"\"Remember and Understand\" level of cognitive assessment",
         R"({"question": "What is the exact date, team and college that Murray was drafted into the NBA?", "ref_answer": "June 23, 2016; Denver Nuggets; Kentucky."})"},
        {"\"Applying\" level of cognitive assessment",
         R"({"question": "How many free throws does a 90 percent shooter make in 40 attempts?", "ref_answer": "36"})"},
        {"\"Analysing\" level of cognitive assessment",
         R"({"question": "Break down the trade-offs between guard-heavy and wing-heavy lineups.", "ref_answer": "Guards create pace, wings defend switches."})"},
        {"\"Evaluation\" level of cognitive assessment",
         R"({"question": "A pundit claims a backup guard led four straight titles. Correct?", "ref_answer": "No, the claim is misleading."})"},
    };
}

}  // namespace

TEST_CASE("parse_generated_sample extracts JSON from prose and fences") {
    TaskSpec task = default_task_spec("sports_understanding", "d", AnswerKind::TargetScores);

    SUBCASE("the published mimic output parses to a target-scores candidate") {
        CandidateSample candidate = parse_generated_sample(
            R"({"input": "Jamal Murray made 10 three-pointers in a row",
                "target_scores": {"plausible": 1, "implausible": 0}})",
            task);
        REQUIRE(candidate.sample.has_value());
        CHECK_FALSE(candidate.refused);
        CHECK(candidate.sample->input_text == "Jamal Murray made 10 three-pointers in a row");
        CHECK(candidate.sample->answer.correct_text() == "plausible");
    }
    SUBCASE("refusals are recognized, with quotes and any casing") {
        CHECK(parse_generated_sample("None", task).refused);
        CHECK(parse_generated_sample("  \"none\"  ", task).refused);
        CHECK(parse_generated_sample("NONE", task).refused);
        CHECK_FALSE(parse_generated_sample("None of the above, here you go: {}", task).refused);
    }
    SUBCASE("prose and code fences around the object are tolerated") {
        TaskSpec extend_task = default_task_spec("x", "d", AnswerKind::FreeResponse);
        CandidateSample candidate = parse_generated_sample(
            "Sure! Here is the sample you asked for:\n```json\n"
            "{\"question\": \"Q?\", \"ref_answer\": \"A.\"}\n```\nHope it helps!",
            extend_task);
        REQUIRE(candidate.sample.has_value());
        CHECK(candidate.sample->input_text == "Q?");
        CHECK(candidate.sample->answer.reference == "A.");
    }
    SUBCASE("extend keys match case- and underscore-insensitively") {
        TaskSpec extend_task = default_task_spec("x", "d", AnswerKind::FreeResponse);
        CandidateSample candidate = parse_generated_sample(
            R"({"Question": "Q?", "Ref Answer": "A."})", extend_task);
        REQUIRE(candidate.sample.has_value());
        CandidateSample underscored = parse_generated_sample(
            R"({"QUESTION": "Q?", "REF_ANSWER": "A."})", extend_task);
        REQUIRE(underscored.sample.has_value());
    }
    SUBCASE("garbage yields no sample but keeps the raw text") {
        CandidateSample candidate = parse_generated_sample("not json at all", task);
        CHECK_FALSE(candidate.refused);
        CHECK_FALSE(candidate.sample.has_value());
        CHECK(candidate.raw_response == "not json at all");

        CandidateSample broken = parse_generated_sample("{\"input\": \"x\", \"target_scores\"",
                                                        task);
        CHECK_FALSE(broken.sample.has_value());
    }
    SUBCASE("target-scores invariant holds: exactly one winner") {
        CandidateSample two_winners = parse_generated_sample(
            R"({"input": "x", "target_scores": {"a": 1, "b": 1}})", task);
        CHECK_FALSE(two_winners.sample.has_value());
    }
    SUBCASE("multiple-choice candidates keep letters and validate the answer") {
        TaskSpec mc_task = default_task_spec("computer_security", "d",
                                             AnswerKind::MultipleChoice);
        CandidateSample candidate = parse_generated_sample(
            R"({"question": "Which of the following is a form of ransomware?",
                "A": "Jigsaw", "B": "Powload", "C": "Loki", "D": "Kovter", "answer": "A"})",
            mc_task);
        REQUIRE(candidate.sample.has_value());
        CHECK(candidate.sample->answer.answer_letter == "A");
        CHECK(candidate.sample->answer.correct_text() == "Jigsaw");

        CandidateSample bad_letter = parse_generated_sample(
            R"({"question": "q", "A": "a", "B": "b", "answer": "E"})", mc_task);
        CHECK_FALSE(bad_letter.sample.has_value());
    }
}

TEST_CASE("mimic_update accepts the scripted sports candidates") {
    DatasetSnapshot source = sports_source();
    Gateway gateway(mock_backend(sports_script(), MockFallback::Refuse));
    GenerationRun run = mimic_update(source, default_gen_config(), gateway);

    REQUIRE(run.accepted.size() == 2);
    CHECK(run.accepted[0].input_text == "Jamal Murray made 10 three-pointers in a row");
    CHECK(run.accepted[0].origin == SampleOrigin::Mimicked);
    CHECK(run.accepted[0].iteration == 1);
    CHECK(run.accepted[0].seed_ref == source.samples[0].id);
    CHECK(run.accepted[0].answer.correct_text() == "plausible");
    CHECK(run.issued == 2);
    check_stats_reconcile(run);
}

TEST_CASE("mimic_update rejects unparseable generations as ParseFailure") {
    DatasetSnapshot source = sports_source();
    Gateway gateway(mock_backend({{"question-writer", "sorry, no JSON here"}},
                                 MockFallback::Refuse));
    GenerationRun run = mimic_update(source, default_gen_config(), gateway);
    CHECK(run.accepted.empty());
    CHECK(run.stats.at(RejectReason::ParseFailure) == 2);
    check_stats_reconcile(run);
}

TEST_CASE("mimic_update rejects echoed seeds as duplicates") {
    DatasetSnapshot source = sports_source();
    std::map<std::string, std::string> script = {
        {"question-writer&&Jamal Murray was perfect from the line",
         R"({"input": "Jamal Murray was perfect from the line", "target_scores": {"plausible": 1, "implausible": 0}})"},
        {"question-writer&&Derrick White backhanded a shot",
         R"({"input": "Derrick White backhanded a shot", "target_scores": {"plausible": 0, "implausible": 1}})"},
        // Self-check answers match the labels so rejection is down to dedup.
        {"Jamal Murray was perfect from the line&&Options", "plausible"},
        {"Derrick White backhanded a shot&&Options", "implausible"},
    };
    Gateway gateway(mock_backend(script, MockFallback::Refuse));
    GenerationRun run = mimic_update(source, default_gen_config(), gateway);
    CHECK(run.accepted.empty());
    CHECK(run.stats.at(RejectReason::Duplicate) == 2);
    check_stats_reconcile(run);
}

TEST_CASE("mimic_update records failed self-checks") {
    DatasetSnapshot source = sports_source();
    std::map<std::string, std::string> script = sports_script();
    script["Jamal Murray made 10 three-pointers in a row&&Options"] = "implausible";
    Gateway gateway(mock_backend(script, MockFallback::Refuse));
    GenerationRun run = mimic_update(source, default_gen_config(), gateway);
    CHECK(run.accepted.size() == 1);
    CHECK(run.stats.at(RejectReason::SelfCheckFailed) == 1);
    check_stats_reconcile(run);
}

TEST_CASE("mimic_update is deterministic for a fixed mock and config") {
    DatasetSnapshot source = sports_source();
    GenerationConfig config = default_gen_config();
    Gateway first(mock_backend(sports_script(), MockFallback::Refuse));
    Gateway second(mock_backend(sports_script(), MockFallback::Refuse));
    GenerationRun a = mimic_update(source, config, first);
    GenerationRun b = mimic_update(source, config, second);
    REQUIRE(a.accepted.size() == b.accepted.size());
    for (std::size_t i = 0; i < a.accepted.size(); ++i) {
        CHECK(a.accepted[i] == b.accepted[i]);
    }
}

TEST_CASE("extend_update fills every level quota with a cooperative mock") {
    std::vector<Seed> seeds = twenty_seeds();
    REQUIRE(seeds.size() == 20);
    TaskSpec task = default_task_spec("sports_extended", "", AnswerKind::FreeResponse);
    Gateway gateway(mock_backend(extend_script(), MockFallback::Refuse));

    GenerationRun run = extend_update(seeds, LevelPlan::uniform(20), task, default_gen_config(),
                                      gateway);
    CHECK(run.accepted.size() == 80);
    CHECK(run.underfilled.empty());
    for (CognitiveLevel level : kAllLevels) {
        CHECK(run.per_level_accepted.at(level) == 20);
    }
    for (const Sample& sample : run.accepted) {
        REQUIRE(sample.level.has_value());
        CHECK(sample.origin == SampleOrigin::Extended);
        CHECK(sample.seed_ref.has_value());
        CHECK(sample.answer.kind == AnswerKind::FreeResponse);
    }
    check_stats_reconcile(run);
}

TEST_CASE("extend_update reports PlanUnderfilled when a level only refuses") {
    std::vector<Seed> seeds = twenty_seeds();
    std::map<std::string, std::string> script = extend_script();
    script["\"Evaluation\" level of cognitive assessment"] = "None";
    TaskSpec task = default_task_spec("sports_extended", "", AnswerKind::FreeResponse);
    Gateway gateway(mock_backend(script, MockFallback::Refuse));

    GenerationRun run = extend_update(seeds, LevelPlan::uniform(20), task, default_gen_config(),
                                      gateway);
    CHECK(run.accepted.size() == 60);
    CHECK(run.refused == 20);
    REQUIRE(run.underfilled.size() == 1);
    CHECK(run.underfilled[0].first == CognitiveLevel::Evaluation);
    CHECK(run.underfilled[0].second == 20);
    CHECK(run.per_level_accepted.at(CognitiveLevel::Evaluation) == 0);
    check_stats_reconcile(run);
}

TEST_CASE("extend_update with 40 seeds and quota 40 yields 160") {
    std::vector<Seed> seeds;
    for (int i = 0; i < 40; ++i) {
        seeds.push_back({"algo/" + std::to_string(i), "algorithm " + std::to_string(i),
                         SeedKind::AlgorithmName, {}});
    }
    TaskSpec task = default_task_spec("algos_extended", "", AnswerKind::FreeResponse);
    Gateway gateway(mock_backend(extend_script(), MockFallback::Refuse));
    GenerationRun run = extend_update(seeds, LevelPlan::uniform(40), task, default_gen_config(),
                                      gateway);
    CHECK(run.accepted.size() == 160);
    check_stats_reconcile(run);
}

TEST_CASE("per-level acceptance never exceeds the plan") {
    std::vector<Seed> seeds = twenty_seeds();
    TaskSpec task = default_task_spec("sports_extended", "", AnswerKind::FreeResponse);
    Gateway gateway(mock_backend(extend_script(), MockFallback::Refuse));
    LevelPlan plan;
    plan.per_level_count[CognitiveLevel::Apply] = 5;
    plan.per_level_count[CognitiveLevel::Evaluation] = 3;
    GenerationRun run = extend_update(seeds, plan, task, default_gen_config(), gateway);
    CHECK(run.accepted.size() == 8);
    CHECK(run.per_level_accepted.at(CognitiveLevel::Apply) == 5);
    CHECK(run.per_level_accepted.at(CognitiveLevel::Evaluation) == 3);
    CHECK(run.per_level_accepted.count(CognitiveLevel::RememberUnderstand) == 0);
    for (const Sample& sample : run.accepted) {
        CHECK((sample.level == CognitiveLevel::Apply || sample.level == CognitiveLevel::Evaluation));
    }
}

TEST_CASE("iterate_to_target accumulates across iterations and truncates") {
    TaskSpec task = default_task_spec("toy", "", AnswerKind::FreeResponse);

    SUBCASE("target zero runs nothing") {
        DatasetSnapshot snapshot = iterate_to_target(
            task, UpdateStrategy::Mimic,
            [](std::uint32_t, const std::vector<Sample>&) -> GenerationRun {
                FAIL("update_fn must not run for target 0");
                return {};
            },
            0, 3);
        CHECK(snapshot.samples.empty());
        CHECK(snapshot.iteration_count == 0);
        CHECK(snapshot.shortfall == 0);
    }
    SUBCASE("stops once the target is reached, truncating in order") {
        int calls = 0;
        auto update_fn = [&](std::uint32_t iteration,
                             const std::vector<Sample>& prior) -> GenerationRun {
            ++calls;
            GenerationRun run;
            run.iteration = iteration;
            // 6 fresh samples per iteration.
            for (int i = 0; i < 6; ++i) {
                Sample sample;
                sample.id = "toy/" + std::to_string(prior.size() + static_cast<std::size_t>(i));
                sample.task_id = "toy";
                sample.input_text = "q " + sample.id;
                sample.answer.kind = AnswerKind::FreeResponse;
                sample.answer.reference = "a";
                sample.origin = SampleOrigin::Mimicked;
                sample.iteration = iteration;
                run.accepted.push_back(sample);
            }
            run.issued = 6;
            return run;
        };
        DatasetSnapshot snapshot =
            iterate_to_target(task, UpdateStrategy::Mimic, update_fn, 10, 5);
        CHECK(calls == 2);
        CHECK(snapshot.samples.size() == 10);
        CHECK(snapshot.iteration_count == 2);
        CHECK(snapshot.shortfall == 0);
        CHECK(snapshot.samples[0].id == "toy/0");
        CHECK(snapshot.samples[9].id == "toy/9");
    }
    SUBCASE("shortfall is recorded when iterations run out") {
        auto update_fn = [](std::uint32_t iteration,
                            const std::vector<Sample>& prior) -> GenerationRun {
            GenerationRun run;
            run.iteration = iteration;
            Sample sample;
            sample.id = "toy/" + std::to_string(prior.size());
            sample.task_id = "toy";
            sample.input_text = "q";
            sample.answer.kind = AnswerKind::FreeResponse;
            sample.answer.reference = "a";
            run.accepted.push_back(sample);
            run.issued = 2;
            return run;
        };
        DatasetSnapshot snapshot =
            iterate_to_target(task, UpdateStrategy::Mimic, update_fn, 4, 1);
        CHECK(snapshot.samples.size() == 1);
        CHECK(snapshot.shortfall == 3);
    }
}

TEST_CASE("iterate_to_target with the sports mock dedups across iterations") {
    DatasetSnapshot source = sports_source();
    Gateway gateway(mock_backend(sports_script(), MockFallback::Refuse));
    UpdateFn update_fn = [&](std::uint32_t iteration, const std::vector<Sample>& prior) {
        GenerationConfig config = default_gen_config();
        config.iteration = iteration;
        config.id_offset = prior.size();
        config.dedup_against = prior;
        return mimic_update(source, config, gateway);
    };
    // The deterministic mock regenerates the same two candidates each
    // iteration; cross-iteration dedup blocks the repeats, so the run stops
    // at the iteration cap with a shortfall.
    DatasetSnapshot snapshot =
        iterate_to_target(source.task, UpdateStrategy::Mimic, update_fn, 4, 3);
    CHECK(snapshot.samples.size() == 2);
    CHECK(snapshot.iteration_count == 3);
    CHECK(snapshot.shortfall == 2);
    CHECK(snapshot.samples[0].iteration == 1);
}

TEST_CASE("generate_rationale extracts the explanation section") {
    Sample sample;
    sample.id = "s";
    sample.task_id = "t";
    sample.input_text = "Why is the sky blue?";
    sample.answer.kind = AnswerKind::FreeResponse;
    sample.answer.reference = "Rayleigh scattering";

    SUBCASE("marked explanation") {
        Gateway gateway(mock_backend(
            {{"always follow my word", "### Explanation ### Because X."}}, MockFallback::Echo));
        CHECK(generate_rationale(sample, gateway, "m") == "Because X.");
    }
    SUBCASE("unmarked prose passes through") {
        Gateway gateway(mock_backend({{"always follow my word", "plain prose rationale"}},
                                     MockFallback::Echo));
        CHECK(generate_rationale(sample, gateway, "m") == "plain prose rationale");
    }
    SUBCASE("marker followed by another section stops early") {
        Gateway gateway(mock_backend(
            {{"always follow my word",
              "###Explanation### Because Y.\n###Question### echoed back"}},
            MockFallback::Echo));
        CHECK(generate_rationale(sample, gateway, "m") == "Because Y.");
    }
    SUBCASE("batch keeps input order") {
        std::vector<Sample> batch;
        for (int i = 0; i < 3; ++i) {
            Sample s = sample;
            s.id = "s" + std::to_string(i);
            s.input_text = "question " + std::to_string(i) + "?";
            batch.push_back(s);
        }
        std::map<std::string, std::string> script;
        for (int i = 0; i < 3; ++i) {
            script["question " + std::to_string(i) + "?"] =
                "### Explanation ### rationale " + std::to_string(i);
        }
        Gateway gateway(mock_backend(script, MockFallback::Echo));
        auto rationales = generate_rationales(batch, gateway, "m");
        REQUIRE(rationales.size() == 3);
        for (int i = 0; i < 3; ++i) {
            CHECK(rationales[static_cast<std::size_t>(i)] ==
                  "rationale " + std::to_string(i));
        }
    }
}

TEST_CASE("iterate_to_target reaches a 951-sample target from 1000 seeds") {
    TaskSpec task = default_task_spec("sports_understanding", "", AnswerKind::TargetScores);
    // Scripted acceptance schedule: ~92% of 1000 seeds accepted per
    // iteration (fresh content each round), so the second round crosses the
    // target and the result truncates to exactly 951.
    int calls = 0;
    auto update_fn = [&calls](std::uint32_t iteration,
                              const std::vector<Sample>& prior) -> GenerationRun {
        ++calls;
        GenerationRun run;
        run.iteration = iteration;
        run.issued = 1000;
        for (int i = 0; i < 920; ++i) {
            Sample sample;
            sample.task_id = "sports_understanding";
            sample.input_text = "generated statement " + std::to_string(prior.size()) + "/" +
                                std::to_string(i) + " at iteration " + std::to_string(iteration);
            sample.answer.kind = AnswerKind::TargetScores;
            sample.answer.target_scores = {{"plausible", 1}, {"implausible", 0}};
            sample.origin = SampleOrigin::Mimicked;
            sample.iteration = iteration;
            sample.id = make_sample_id(sample.task_id, prior.size() + static_cast<std::size_t>(i),
                                       sample.input_text, sample.answer);
            run.accepted.push_back(std::move(sample));
        }
        return run;
    };
    DatasetSnapshot snapshot =
        iterate_to_target(task, UpdateStrategy::Mimic, update_fn, 951, 3);
    CHECK(calls == 2);
    CHECK(snapshot.samples.size() == 951);
    CHECK(snapshot.iteration_count == 2);
    CHECK(snapshot.shortfall == 0);
}

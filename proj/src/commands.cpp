#include "benchup/commands.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <set>
#include <sstream>
#include <memory>
#include <thread>

#include <json.hpp>

#include "benchup/contamination.hpp"
#include "benchup/errors.hpp"
#include "benchup/evaluator.hpp"
#include "benchup/generator.hpp"
#include "benchup/leaderboard.hpp"
#include "benchup/promptkit.hpp"
#include "benchup/util.hpp"
#include "benchup/validators.hpp"

namespace benchup {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

Gateway make_gateway(RunConfig& config) {
    BackendConfig backend = config.backend;
    if (!backend.cache_dir && backend.kind != BackendKind::Mock) {
        backend.cache_dir = config.cache_dir();
    }
    if (config.mock_script_file) {
        Json script = Json::parse(read_file(*config.mock_script_file));
        for (auto it = script.begin(); it != script.end(); ++it) {
            backend.script[it.key()] = it.value().get<std::string>();
        }
    }
    return Gateway(std::move(backend));
}

/// Index-parallel map with the result order fixed by input order.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    if (count == 0) return;
    workers = std::max<std::size_t>(1, std::min(workers, count));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        threads.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& thread : threads) thread.join();
}

std::string sanitize_name(std::string name) {
    for (char& c : name) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    }
    return name;
}

}  // namespace

DatasetSnapshot load_task_file(const fs::path& path) {
    const std::string bytes = read_file(path);
    const std::string ext = to_lower(path.extension().string());
    if (ext == ".csv") {
        return parse_mmlu_rows(bytes, path.stem().string());
    }
    return parse_bigbench_task(bytes, path.stem().string());
}

// ---------------------------------------------------------------------------
// update
// ---------------------------------------------------------------------------

namespace {

int run_mimic_update(RunConfig& config, const UpdateArgs& args) {
    if (args.task_files.empty()) {
        std::cerr << "error: mimic update requires at least one --task file\n";
        return kExitFatal;
    }
    int exit_code = kExitOk;
    for (const fs::path& task_file : args.task_files) {
        DatasetSnapshot source = load_task_file(task_file);
        if (args.description) source.task.description = *args.description;
        const std::size_t target = args.target_size.value_or(
            config.strategy.target_size > 0 ? config.strategy.target_size
                                            : source.samples.size());

        if (args.dry_run) {
            std::size_t rendered = 0;
            std::size_t seed_count = source.samples.size();
            if (config.strategy.seed_limit > 0) {
                seed_count = std::min(seed_count, config.strategy.seed_limit);
            }
            for (std::size_t i = 0; i < seed_count; ++i) {
                render_mimic_prompt(source.task, source.samples[i]);
                ++rendered;
            }
            std::cout << "dry-run: task " << source.task.task_id << ": " << rendered
                      << " generation prompts per iteration (up to "
                      << config.strategy.max_iterations << " iterations x " << args.iterations
                      << " runs); validation adds at most one self-check call per candidate\n";
            continue;
        }

        Gateway gateway = make_gateway(config);
        std::ostringstream summary;
        for (std::uint32_t r = 1; r <= args.iterations; ++r) {
            std::vector<GenerationRun> runs;
            UpdateFn update_fn = [&](std::uint32_t iteration, const std::vector<Sample>& prior) {
                GenerationConfig gen;
                gen.generator_model = config.generator_model;
                gen.dedup_threshold = config.strategy.dedup_threshold;
                gen.seed_limit = config.strategy.seed_limit;
                gen.iteration = iteration;
                gen.id_offset = prior.size();
                gen.dedup_against = prior;
                GenerationRun run = mimic_update(source, gen, gateway);
                runs.push_back(run);
                return run;
            };
            DatasetSnapshot snapshot =
                iterate_to_target(source.task, UpdateStrategy::Mimic, update_fn, target,
                                  config.strategy.max_iterations);
            snapshot.created_at = config.resolve_created_at();

            const std::string stem =
                sanitize_name(source.task.task_id) + "_mimic_r" + std::to_string(r);
            write_file_atomic(config.snapshots_dir() / (stem + ".jsonl"),
                              write_snapshot(snapshot));
            Json combined;
            combined["snapshot"] = stem + ".jsonl";
            Json iterations = Json::array();
            for (const GenerationRun& run : runs) {
                iterations.push_back(Json::parse(run_report_json(run)));
            }
            combined["iterations"] = std::move(iterations);
            write_file_atomic(config.runs_dir() / (stem + ".json"), combined.dump(2) + "\n");

            summary << stem << ": " << snapshot.samples.size() << "/" << target << " samples in "
                    << snapshot.iteration_count << " iteration(s)";
            if (snapshot.shortfall > 0) summary << ", shortfall " << snapshot.shortfall;
            summary << "\n";
        }
        const std::string summary_text = summary.str();
        write_file_atomic(config.runs_dir() /
                              (sanitize_name(source.task.task_id) + "_mimic_summary.txt"),
                          summary_text);
        std::cout << summary_text;
    }
    return exit_code;
}

int run_extend_update(RunConfig& config, const UpdateArgs& args) {
    if (!args.seeds_file) {
        std::cerr << "error: extend update requires --seeds\n";
        return kExitFatal;
    }
    if (!fs::exists(*args.seeds_file)) {
        std::cerr << "error: seed file not found: " << args.seeds_file->string() << "\n";
        return kExitFatal;
    }
    const std::vector<Seed> seeds = read_seed_file(read_file(*args.seeds_file));
    if (seeds.empty()) {
        std::cerr << "error: seed file is empty: " << args.seeds_file->string() << "\n";
        return kExitFatal;
    }

    LevelPlan plan;
    if (args.per_level) {
        plan = LevelPlan::uniform(*args.per_level);
    } else if (config.strategy.level_plan) {
        plan = *config.strategy.level_plan;
    } else {
        std::cerr << "error: extend update requires --per-level or a configured level plan\n";
        return kExitFatal;
    }

    const std::string task_id =
        args.task_id.value_or(args.seeds_file->stem().string() + "_extended");
    TaskSpec task;
    task.task_id = task_id;
    task.description = "";
    task.answer_kind = AnswerKind::FreeResponse;
    task.validation = ValidationMethod::ModelSelfCheck;

    if (args.dry_run) {
        std::size_t rendered = 0;
        for (CognitiveLevel level : kAllLevels) {
            auto it = plan.per_level_count.find(level);
            if (it == plan.per_level_count.end() || it->second == 0) continue;
            for (const Seed& seed : seeds) render_extend_prompt(level, seed), ++rendered;
        }
        std::cout << "dry-run: task " << task_id << ": up to " << rendered
                  << " extend prompts per run x " << args.iterations << " runs\n";
        return kExitOk;
    }

    Gateway gateway = make_gateway(config);
    int exit_code = kExitOk;
    std::ostringstream summary;
    for (std::uint32_t r = 1; r <= args.iterations; ++r) {
        GenerationConfig gen;
        gen.generator_model = config.generator_model;
        gen.dedup_threshold = config.strategy.dedup_threshold;
        gen.iteration = 1;
        GenerationRun run = extend_update(seeds, plan, task, gen, gateway);

        DatasetSnapshot snapshot;
        snapshot.task = task;
        snapshot.samples = run.accepted;
        snapshot.created_at = config.resolve_created_at();
        snapshot.strategy = UpdateStrategy::Extend;
        snapshot.iteration_count = 1;
        snapshot.shortfall = static_cast<std::uint32_t>(plan.total() - run.accepted.size());

        const std::string stem = sanitize_name(task_id) + "_extend_r" + std::to_string(r);
        write_file_atomic(config.snapshots_dir() / (stem + ".jsonl"), write_snapshot(snapshot));
        Json report = Json::parse(run_report_json(run));
        report["snapshot"] = stem + ".jsonl";
        write_file_atomic(config.runs_dir() / (stem + ".json"), report.dump(2) + "\n");

        summary << stem << ": " << run.accepted.size() << "/" << plan.total() << " samples";
        if (!run.underfilled.empty()) {
            exit_code = kExitWarnings;
            summary << "; plan underfilled:";
            for (const auto& [level, shortfall] : run.underfilled) {
                summary << " " << to_string(level) << " short by " << shortfall;
            }
        }
        summary << "\n";
    }
    const std::string summary_text = summary.str();
    write_file_atomic(config.runs_dir() / (sanitize_name(task_id) + "_extend_summary.txt"),
                      summary_text);
    std::cout << summary_text;
    if (exit_code == kExitWarnings) {
        std::cerr << "warning: PlanUnderfilled — one or more level quotas could not be met\n";
    }
    return exit_code;
}

}  // namespace

int cmd_update(RunConfig& config, const UpdateArgs& args) {
    if (args.strategy == "mimic") return run_mimic_update(config, args);
    if (args.strategy == "extend") return run_extend_update(config, args);
    std::cerr << "error: unknown strategy \"" << args.strategy << "\" (use mimic or extend)\n";
    return kExitFatal;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(RunConfig& config, const ValidateArgs& args) {
    if (!fs::exists(args.snapshot)) {
        std::cerr << "error: snapshot not found: " << args.snapshot.string() << "\n";
        return kExitFatal;
    }
    DatasetSnapshot snapshot = read_snapshot(read_file(args.snapshot));
    if (args.dry_run) {
        std::cout << "dry-run: would validate " << snapshot.samples.size() << " samples of task "
                  << snapshot.task.task_id << "\n";
        return kExitOk;
    }
    Gateway gateway = make_gateway(config);

    Json rows = Json::array();
    std::size_t passed = 0;
    std::map<std::string, std::size_t> failures;
    for (const Sample& sample : snapshot.samples) {
        ValidationVerdict verdict =
            validate_sample(sample, snapshot.task, gateway, config.generator_model);
        if (verdict.pass) {
            ++passed;
        } else {
            ++failures[std::string(to_string(verdict.reason))];
        }
        Json row;
        row["sample_id"] = sample.id;
        row["pass"] = verdict.pass;
        row["reason"] = std::string(to_string(verdict.reason));
        if (!verdict.detail.empty()) row["detail"] = verdict.detail;
        rows.push_back(std::move(row));
    }

    Json report;
    report["task"] = snapshot.task.task_id;
    report["total"] = snapshot.samples.size();
    report["passed"] = passed;
    Json failure_counts = Json::object();
    for (const auto& [reason, count] : failures) failure_counts[reason] = count;
    report["failures"] = std::move(failure_counts);
    report["rows"] = std::move(rows);

    const std::string stem = "validate_" + sanitize_name(snapshot.task.task_id);
    write_file_atomic(config.reports_dir() / (stem + ".json"), report.dump(2) + "\n");
    std::cout << "validate " << snapshot.task.task_id << ": " << passed << "/"
              << snapshot.samples.size() << " passed\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// contaminate
// ---------------------------------------------------------------------------

int cmd_contaminate(RunConfig& config, const ContaminateArgs& args) {
    if (!fs::exists(args.snapshot)) {
        std::cerr << "error: snapshot not found: " << args.snapshot.string() << "\n";
        return kExitFatal;
    }
    DatasetSnapshot snapshot = read_snapshot(read_file(args.snapshot));

    std::vector<fs::path> corpus_paths =
        args.corpus.empty() ? config.contamination.corpus_paths : args.corpus;
    if (corpus_paths.empty()) {
        std::cerr << "error: no corpus manifests configured\n";
        return kExitFatal;
    }
    std::vector<CorpusDoc> corpus;
    for (const fs::path& path : corpus_paths) {
        if (!fs::exists(path)) {
            std::cerr << "error: corpus manifest not found: " << path.string() << "\n";
            return kExitFatal;
        }
        auto docs = read_corpus_manifest(read_file(path));
        corpus.insert(corpus.end(), std::make_move_iterator(docs.begin()),
                      std::make_move_iterator(docs.end()));
    }
    if (args.dry_run) {
        std::cout << "dry-run: would classify " << snapshot.samples.size() << " samples against "
                  << corpus.size() << " corpus docs\n";
        return kExitOk;
    }

    ContaminationReport report =
        build_report(snapshot, corpus, config.contamination.threshold);
    const std::string stem = "contamination_" + sanitize_name(snapshot.task.task_id);
    write_file_atomic(config.reports_dir() / (stem + ".json"), report_to_json(report));
    write_file_atomic(config.reports_dir() / (stem + ".md"), report_to_markdown(report));
    std::cout << "contaminate " << snapshot.task.task_id << ": total " << report.total
              << ", clean " << report.clean << ", input dirty " << report.input_dirty
              << ", input-label dirty " << report.input_label_dirty << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(RunConfig& config, const EvalArgs& args) {
    if (args.snapshots.empty()) {
        std::cerr << "error: eval requires at least one snapshot\n";
        return kExitFatal;
    }
    std::vector<fs::path> snapshot_paths = args.snapshots;
    if (args.runs > 1) {
        // One path with an _r1 suffix expands to the whole run series.
        if (snapshot_paths.size() != 1) {
            std::cerr << "error: --runs expects exactly one --snapshot naming run 1\n";
            return kExitFatal;
        }
        const std::string first = snapshot_paths.front().string();
        const std::size_t marker = first.rfind("_r1");
        if (marker == std::string::npos) {
            std::cerr << "error: --runs expects the snapshot name to contain \"_r1\"\n";
            return kExitFatal;
        }
        snapshot_paths.clear();
        for (std::uint32_t r = 1; r <= args.runs; ++r) {
            std::string path = first;
            path.replace(marker, 3, "_r" + std::to_string(r));
            snapshot_paths.emplace_back(path);
        }
    }

    std::map<std::string, std::uint64_t> seed_popularity;
    if (args.seeds_file) {
        std::unique_ptr<PageviewClient> client;
        if (config.popularity.client_mode == "file" && config.popularity.views_file) {
            client = std::make_unique<FilePageviewClient>(
                FilePageviewClient::from_json_file(*config.popularity.views_file));
        } else if (config.popularity.client_mode == "http") {
            client = std::make_unique<HttpPageviewClient>();
        }
        for (const Seed& seed : read_seed_file(read_file(*args.seeds_file))) {
            if (seed.popularity) {
                seed_popularity[seed.id] = *seed.popularity;
            } else if (client) {
                try {
                    seed_popularity[seed.id] =
                        popularity_fetch(seed.text, config.popularity.year, *client);
                } catch (const PopularityUnknown&) {
                    // left absent; the sample is excluded from bins
                }
            }
        }
    }
    const std::string model = args.model.value_or(config.answer_model);

    std::vector<DatasetSnapshot> snapshots;
    for (const fs::path& path : snapshot_paths) {
        if (!fs::exists(path)) {
            std::cerr << "error: snapshot not found: " << path.string() << "\n";
            return kExitFatal;
        }
        snapshots.push_back(read_snapshot(read_file(path)));
    }
    const std::string task_id = snapshots.front().task.task_id;

    if (args.dry_run) {
        std::size_t total = 0;
        for (const auto& snapshot : snapshots) total += snapshot.samples.size();
        std::cout << "dry-run: would answer " << total << " samples with " << model
                  << " (plus judge calls for extended free-form samples)\n";
        return kExitOk;
    }

    Gateway gateway = make_gateway(config);

    std::vector<double> run_scores;
    std::vector<EvalRecord> pooled;
    std::vector<JudgeVerdict> all_verdicts;
    std::string metric_kind = "exact_match";
    try {
        for (const DatasetSnapshot& snapshot : snapshots) {
            if (snapshot.samples.empty()) {
                throw EmptyEvaluation("snapshot for task " + snapshot.task.task_id +
                                      " has no samples");
            }
            const std::size_t n = snapshot.samples.size();
            std::vector<EvalRecord> records(n);
            std::vector<std::string> responses(n);

            parallel_for(n, gateway.config().max_concurrency, [&](std::size_t i) {
                const Sample& sample = snapshot.samples[i];
                ChatRequest request;
                request.prompt = render_answer_prompt(sample);
                request.model_name = model;
                request.temperature = 0.0;
                request.max_tokens = 1024;
                request.tag = "answer";
                responses[i] = gateway.complete(request).text;
            });

            std::vector<JudgeVerdict> verdicts;
            for (std::size_t i = 0; i < n; ++i) {
                const Sample& sample = snapshot.samples[i];
                EvalRecord record;
                record.sample_id = sample.id;
                record.model_name = model;
                record.response_text = responses[i];
                record.level = sample.level;
                if (sample.seed_ref) {
                    auto it = seed_popularity.find(*sample.seed_ref);
                    if (it != seed_popularity.end()) record.popularity = it->second;
                }
                const bool judged = sample.origin == SampleOrigin::Extended &&
                                    sample.answer.kind == AnswerKind::FreeResponse;
                if (judged) {
                    record.outcome.kind = OutcomeKind::Judge;
                    record.outcome.verdict =
                        judge(sample, responses[i], gateway, config.judge_model);
                    verdicts.push_back(*record.outcome.verdict);
                } else {
                    record.outcome.kind = OutcomeKind::ExactMatch;
                    record.outcome.em_correct = em_correct(sample, responses[i]);
                }
                records[i] = std::move(record);
            }

            double score = 0.0;
            if (!verdicts.empty() && verdicts.size() == n) {
                score = full_mark_rate(verdicts);
                metric_kind = "full_mark_rate";
            } else {
                score = exact_match(records);
            }
            run_scores.push_back(score);
            pooled.insert(pooled.end(), std::make_move_iterator(records.begin()),
                          std::make_move_iterator(records.end()));
            all_verdicts.insert(all_verdicts.end(), verdicts.begin(), verdicts.end());
        }
    } catch (const EmptyEvaluation& e) {
        std::cerr << "error: EmptyEvaluation: " << e.what() << "\n";
        return kExitWarnings;
    }

    std::vector<std::pair<std::uint32_t, double>> runs;
    for (std::size_t i = 0; i < run_scores.size(); ++i) {
        runs.emplace_back(static_cast<std::uint32_t>(i + 1), run_scores[i]);
    }
    StabilityStats stability = stability_stats(runs, model, task_id);

    EvalReportSummary summary;
    summary.task_id = task_id;
    summary.model_name = model;
    summary.metric_kind = metric_kind;
    summary.score = stability.mean;
    summary.stability = stability;

    std::optional<LevelBreakdown> levels;
    const bool all_have_levels =
        std::all_of(pooled.begin(), pooled.end(),
                    [](const EvalRecord& record) { return record.level.has_value(); });
    if (all_have_levels && !pooled.empty()) levels = level_breakdown(pooled);

    std::vector<PopularityBin> bins;
    const bool any_popularity =
        std::any_of(pooled.begin(), pooled.end(),
                    [](const EvalRecord& record) { return record.popularity.has_value(); });
    if (any_popularity) bins = popularity_bins(pooled, kDefaultPopularityEdges);

    const std::string stem = "eval_" + sanitize_name(task_id) + "_" + sanitize_name(model);
    std::string report_json = eval_report_to_json(summary, levels, bins);
    if (!all_verdicts.empty()) {
        // Full-mark is the headline; the per-dimension means ride along so
        // graded quality stays visible.
        double acc = 0, coh = 0, fac = 0;
        for (const JudgeVerdict& v : all_verdicts) {
            acc += v.accuracy;
            coh += v.coherence;
            fac += v.factuality;
        }
        const double n_verdicts = static_cast<double>(all_verdicts.size());
        Json enriched = Json::parse(report_json);
        enriched["judge_dimension_means"] = {
            {"accuracy", acc / n_verdicts},
            {"coherence", coh / n_verdicts},
            {"factuality", fac / n_verdicts},
        };
        report_json = enriched.dump(2) + "\n";
    }
    write_file_atomic(config.reports_dir() / (stem + ".json"), report_json);

    std::ostringstream md;
    md << "# Evaluation: " << task_id << " / " << model << "\n\n";
    md << "| Task | Model | Metric | Score |\n";
    md << "| --- | --- | --- | --- |\n";
    md << "| " << task_id << " | " << model << " | " << metric_kind << " | "
       << format_mean_std(stability.mean, stability.std_dev) << " |\n";
    if (levels) {
        md << "\n## Cognitive levels\n\n| Level | Full-mark rate |\n| --- | --- |\n";
        for (const auto& [level, rate] : levels->rates) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.1f", rate);
            md << "| " << to_string(level) << " | " << buf << " |\n";
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", levels->overall);
        md << "| overall | " << buf << " |\n";
        if (levels->missing_levels) {
            md << "\nSome levels had no records; Overall averages the levels present.\n";
        }
    }
    write_file_atomic(config.reports_dir() / (stem + ".md"), md.str());

    std::cout << "eval " << task_id << " / " << model << ": "
              << format_mean_std(stability.mean, stability.std_dev) << " (" << metric_kind
              << ", " << run_scores.size() << " run(s))\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// leaderboard
// ---------------------------------------------------------------------------

int cmd_leaderboard(RunConfig& config, const LeaderboardArgs& args) {
    const fs::path reports_dir = args.reports_dir.value_or(config.reports_dir());
    if (!fs::exists(reports_dir)) {
        std::cerr << "error: reports directory not found: " << reports_dir.string() << "\n";
        return kExitFatal;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(reports_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json" &&
            entry.path().filename().string().rfind("eval_", 0) == 0) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "error: no eval reports in " << reports_dir.string() << "\n";
        return kExitFatal;
    }
    std::vector<EvalReportSummary> reports;
    for (const fs::path& file : files) {
        reports.push_back(eval_report_from_json(read_file(file)));
    }
    if (args.dry_run) {
        std::cout << "dry-run: would build a leaderboard from " << reports.size()
                  << " reports\n";
        return kExitOk;
    }
    Leaderboard board;
    try {
        board = build_leaderboard(reports);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    write_file_atomic(config.leaderboard_dir() / "index.md", leaderboard_markdown(board));
    write_file_atomic(config.leaderboard_dir() / "index.html", leaderboard_html(board));
    std::cout << "leaderboard: " << board.rows.size() << " models x " << board.tasks.size()
              << " tasks\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// export-finetune
// ---------------------------------------------------------------------------

int cmd_export_finetune(RunConfig& config, const ExportFinetuneArgs& args) {
    if (!fs::exists(args.snapshot)) {
        std::cerr << "error: snapshot not found: " << args.snapshot.string() << "\n";
        return kExitFatal;
    }
    DatasetSnapshot snapshot = read_snapshot(read_file(args.snapshot));

    FinetuneStyle style;
    if (args.style == "leakage") {
        style = FinetuneStyle::Leakage;
    } else if (args.style == "with-rationale") {
        style = FinetuneStyle::WithRationale;
    } else {
        std::cerr << "error: unknown style \"" << args.style
                  << "\" (use leakage or with-rationale)\n";
        return kExitFatal;
    }

    if (args.dry_run) {
        std::cout << "dry-run: would export " << snapshot.samples.size() << " records";
        if (style == FinetuneStyle::WithRationale) std::cout << " with rationales";
        std::cout << "\n";
        return kExitOk;
    }

    std::vector<std::pair<Sample, std::string>> rows;
    if (style == FinetuneStyle::WithRationale) {
        const fs::path cache_path =
            config.cache_dir() / ("rationales_" + sanitize_name(snapshot.task.task_id) + ".json");
        std::map<std::string, std::string> cache;
        if (auto cached = try_read_file(cache_path)) {
            Json j = Json::parse(*cached);
            for (auto it = j.begin(); it != j.end(); ++it) {
                cache[it.key()] = it.value().get<std::string>();
            }
        }
        std::vector<const Sample*> missing;
        for (const Sample& sample : snapshot.samples) {
            if (cache.find(sample.id) == cache.end()) missing.push_back(&sample);
        }
        if (!missing.empty() && args.offline) {
            std::cerr << "error: offline mode but " << missing.size()
                      << " samples have no cached rationale (" << cache_path.string() << ")\n";
            return kExitFatal;
        }
        if (!missing.empty()) {
            Gateway gateway = make_gateway(config);
            for (const Sample* sample : missing) {
                cache[sample->id] = generate_rationale(*sample, gateway, config.generator_model);
            }
            Json j = Json::object();
            for (const auto& [id, rationale] : cache) j[id] = rationale;
            write_file_atomic(cache_path, j.dump(2) + "\n");
        }
        for (const Sample& sample : snapshot.samples) {
            rows.emplace_back(sample, cache.at(sample.id));
        }
    } else {
        for (const Sample& sample : snapshot.samples) rows.emplace_back(sample, "");
    }

    const fs::path out = args.out.value_or(
        config.output_dir / ("finetune_" + sanitize_name(snapshot.task.task_id) + "_" +
                             sanitize_name(args.style) + ".jsonl"));
    write_file_atomic(out, export_finetune_records(rows, style));
    std::cout << "export-finetune: wrote " << rows.size() << " records to " << out.string()
              << "\n";
    return kExitOk;
}

}  // namespace benchup

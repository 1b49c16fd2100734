#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "benchup/commands.hpp"
#include "benchup/errors.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    bool dry_run = false;
    bool verbose = false;
    std::optional<std::uint64_t> seed;
};

benchup::RunConfig load_effective_config(const GlobalArgs& global) {
    benchup::RunConfig config = global.config_path.empty()
                                    ? benchup::default_config()
                                    : benchup::load_config(global.config_path);
    if (global.seed) config.random_seed = *global.seed;
    config.verbose = global.verbose;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"benchup — benchmark auto-update toolkit"};
    app.require_subcommand(1);

    GlobalArgs global;
    app.add_option("--config", global.config_path, "Run configuration file (JSON)");
    app.add_flag("--dry-run", global.dry_run,
                 "Render prompts and report issuance counts without any backend calls");
    app.add_option("--seed", global.seed, "Override config.random_seed");
    app.add_flag("--verbose", global.verbose, "Chatty progress output");

    benchup::UpdateArgs update_args;
    auto* update = app.add_subcommand("update", "Regenerate a dataset (mimic or extend)");
    update->add_option("--strategy", update_args.strategy, "mimic or extend")->required();
    update->add_option("--task", update_args.task_files,
                       "Source task file(s): BIG-bench JSON or MMLU CSV");
    std::string seeds_path;
    update->add_option("--seeds", seeds_path, "Seed file (line-delimited JSON)");
    std::size_t per_level = 0;
    update->add_option("--per-level", per_level, "Extend: quota per cognitive level");
    update->add_option("--iterations", update_args.iterations,
                       "Independent update runs (stability protocol)");
    std::size_t target = 0;
    update->add_option("--target", target, "Target sample count (mimic)");
    std::string task_id;
    update->add_option("--task-id", task_id, "Task id for extended snapshots");
    std::string description;
    update->add_option("--description", description,
                       "Task description override for generation prompts");

    benchup::ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "Run answer validation over a snapshot");
    validate->add_option("--snapshot", validate_args.snapshot, "Snapshot file")->required();

    benchup::ContaminateArgs contaminate_args;
    auto* contaminate =
        app.add_subcommand("contaminate", "Classify snapshot samples against public corpora");
    contaminate->add_option("--snapshot", contaminate_args.snapshot, "Snapshot file")->required();
    contaminate->add_option("--corpus", contaminate_args.corpus,
                            "Corpus manifest(s); overrides the config list");

    benchup::EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Score a model on snapshot(s)");
    eval->add_option("--snapshot", eval_args.snapshots,
                     "Snapshot file(s); several aggregate stability stats")
        ->required();
    eval->add_option("--runs", eval_args.runs,
                     "Evaluate run series r1..rN from one --snapshot naming run 1");
    std::string eval_seeds;
    eval->add_option("--seeds", eval_seeds, "Seed file providing popularity for breakdowns");
    std::string eval_model;
    eval->add_option("--model", eval_model, "Answering model (defaults to config)");

    benchup::LeaderboardArgs leaderboard_args;
    auto* leaderboard = app.add_subcommand("leaderboard", "Emit static leaderboard files");
    std::string reports_dir;
    leaderboard->add_option("--reports", reports_dir, "Reports directory (defaults to config)");

    benchup::ExportFinetuneArgs export_args;
    auto* export_finetune =
        app.add_subcommand("export-finetune", "Write fine-tuning records for a snapshot");
    export_finetune->add_option("--snapshot", export_args.snapshot, "Snapshot file")->required();
    export_finetune->add_option("--style", export_args.style, "leakage or with-rationale");
    std::string export_out;
    export_finetune->add_option("--out", export_out, "Output file");
    export_finetune->add_flag("--offline", export_args.offline,
                              "Fail instead of calling the backend for missing rationales");

    CLI11_PARSE(app, argc, argv);

    try {
        benchup::RunConfig config = load_effective_config(global);

        if (update->parsed()) {
            if (!seeds_path.empty()) update_args.seeds_file = seeds_path;
            if (per_level > 0) update_args.per_level = per_level;
            if (target > 0) update_args.target_size = target;
            if (!task_id.empty()) update_args.task_id = task_id;
            if (!description.empty()) update_args.description = description;
            update_args.dry_run = global.dry_run;
            return benchup::cmd_update(config, update_args);
        }
        if (validate->parsed()) {
            validate_args.dry_run = global.dry_run;
            return benchup::cmd_validate(config, validate_args);
        }
        if (contaminate->parsed()) {
            contaminate_args.dry_run = global.dry_run;
            return benchup::cmd_contaminate(config, contaminate_args);
        }
        if (eval->parsed()) {
            if (!eval_seeds.empty()) eval_args.seeds_file = eval_seeds;
            if (!eval_model.empty()) eval_args.model = eval_model;
            eval_args.dry_run = global.dry_run;
            return benchup::cmd_eval(config, eval_args);
        }
        if (leaderboard->parsed()) {
            if (!reports_dir.empty()) leaderboard_args.reports_dir = reports_dir;
            leaderboard_args.dry_run = global.dry_run;
            return benchup::cmd_leaderboard(config, leaderboard_args);
        }
        if (export_finetune->parsed()) {
            if (!export_out.empty()) export_args.out = export_out;
            export_args.dry_run = global.dry_run;
            return benchup::cmd_export_finetune(config, export_args);
        }
    } catch (const benchup::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return benchup::kExitFatal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return benchup::kExitFatal;
    }
    return benchup::kExitFatal;
}

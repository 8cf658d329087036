#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "toolsense/cli.hpp"
#include "toolsense/types.hpp"

namespace {

/// --config has to be known before options get their defaults, so it is
/// pre-scanned from argv instead of waiting for the CLI11 parse.
std::string prescan_config_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return {};
}

void require_option(const std::string& value, const char* flag) {
    if (value.empty()) {
        throw toolsense::Error(std::string("missing required option ") + flag +
                               " (set it on the command line or in --config)");
    }
}

void add_train_options(CLI::App* cmd, toolsense::TrainConfig& t) {
    cmd->add_option("--seed", t.seed, "training seed");
    cmd->add_option("--epochs", t.epochs, "max training epochs");
    cmd->add_option("--batch-size", t.batch_size, "mini-batch size");
    cmd->add_option("--lr", t.learning_rate, "learning rate");
    cmd->add_option("--ft-lr-scale", t.fine_tune_lr_scale, "learning-rate scale when fine-tuning");
    cmd->add_option("--momentum", t.momentum, "SGD momentum");
    cmd->add_option("--patience", t.patience, "early-stop patience on validation accuracy");
    cmd->add_option("--hidden", t.hidden_dims, "hidden layer widths");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace toolsense;

    CLI::App app{"toolsense: synthetic-pretraining pipeline for smart hand tool task recognition"};
    app.require_subcommand(1);

    std::string config_path = prescan_config_path(argc, argv);
    std::string out_dir = "out";
    int jobs = 1;

    GenerateConfig generate_cfg;
    IngestConfig ingest_cfg;
    FeaturizeConfig featurize_cfg;
    TrainCommandConfig train_cfg;
    FinetuneConfig finetune_cfg;
    EvaluateConfig evaluate_cfg;
    SweepConfig sweep_cfg;
    SubjectsConfig subjects_cfg;
    CompareDistConfig compare_cfg;

    int exit_code = 0;

    try {
        if (!config_path.empty()) {
            apply_config_file(config_path, generate_cfg);
            apply_config_file(config_path, ingest_cfg);
            apply_config_file(config_path, featurize_cfg);
            apply_config_file(config_path, train_cfg);
            apply_config_file(config_path, finetune_cfg);
            apply_config_file(config_path, evaluate_cfg);
            apply_config_file(config_path, sweep_cfg);
            apply_config_file(config_path, subjects_cfg);
            apply_config_file(config_path, compare_cfg);
        }

        std::string config_echo_only;  // registered so CLI11 accepts the flag
        auto add_common = [&](CLI::App* cmd) {
            cmd->add_option("--config", config_echo_only, "JSON config file");
            cmd->add_option("--out", out_dir, "output directory");
            cmd->add_option("--jobs", jobs, "worker threads for sweep-style commands");
        };
        app.add_option("--config", config_echo_only, "JSON config file");

        auto* generate = app.add_subcommand("generate", "synthesize run CSVs and manifests");
        add_common(generate);
        generate->add_option("--seed", generate_cfg.seed, "dataset seed");
        generate->add_option("--robot-runs", generate_cfg.robot_runs_per_task,
                             "robot runs per task");
        generate->add_option("--subjects", generate_cfg.human_subjects, "human subject count");
        generate->add_option("--runs-per-task", generate_cfg.human_runs_per_task,
                             "human runs per task per subject");
        generate->add_option("--duration", generate_cfg.duration_s, "run duration in seconds");
        generate->add_option("--rate", generate_cfg.rate_hz, "sample rate in Hz");
        generate->add_option("--spread", generate_cfg.subject_spread,
                             "per-subject template perturbation");
        generate->callback([&] { exit_code = cmd_generate(generate_cfg, out_dir); });

        auto* ingest = app.add_subcommand("ingest", "validate a dataset and report statistics");
        add_common(ingest);
        ingest->add_option("--manifest", ingest_cfg.manifest, "manifest path");
        ingest->add_option("--window-seconds", ingest_cfg.window_seconds, "window length");
        ingest->add_option("--overlap", ingest_cfg.overlap_fraction, "window overlap fraction");
        ingest->add_option("--clean-k", ingest_cfg.clean_k, "outlier threshold k");
        ingest->callback([&] {
            require_option(ingest_cfg.manifest, "--manifest");
            exit_code = cmd_ingest(ingest_cfg, out_dir);
        });

        auto* featurize = app.add_subcommand("featurize", "windows -> cleaned normalized features");
        add_common(featurize);
        featurize->add_option("--manifest", featurize_cfg.manifest, "manifest path");
        featurize->add_option("--window-seconds", featurize_cfg.window_seconds, "window length");
        featurize->add_option("--overlap", featurize_cfg.overlap_fraction,
                              "window overlap fraction");
        featurize->add_option("--clean-k", featurize_cfg.clean_k, "outlier threshold k");
        featurize->add_flag("--no-clean{false}", featurize_cfg.clean, "skip outlier cleaning");
        featurize->add_option("--norm", featurize_cfg.norm,
                              "apply an existing normalization file instead of fitting");
        featurize->callback([&] {
            require_option(featurize_cfg.manifest, "--manifest");
            exit_code = cmd_featurize(featurize_cfg, out_dir);
        });

        auto* train_cmd = app.add_subcommand("train", "train a classifier on a feature table");
        add_common(train_cmd);
        train_cmd->add_option("--features", train_cfg.features, "features.csv path");
        train_cmd->add_option("--init", train_cfg.init_checkpoint,
                              "checkpoint to fine-tune from (omit for zero-shot)");
        train_cmd->add_option("--train-on", train_cfg.train_on,
                              "train | all (all = pretraining on every window)");
        add_train_options(train_cmd, train_cfg.train);
        train_cmd->callback([&] {
            require_option(train_cfg.features, "--features");
            exit_code = cmd_train(train_cfg, out_dir);
        });

        auto* finetune = app.add_subcommand("finetune",
                                            "fine-tune a checkpoint on a fraction of human data");
        add_common(finetune);
        finetune->add_option("--checkpoint", finetune_cfg.checkpoint, "pre-trained checkpoint");
        finetune->add_option("--features", finetune_cfg.features, "features.csv path");
        finetune->add_option("--fraction", finetune_cfg.fraction,
                             "fraction of the training split to use");
        finetune->add_option("--sample-seed", finetune_cfg.sample_seed,
                             "seed of the stratified subset draw");
        add_train_options(finetune, finetune_cfg.train);
        finetune->callback([&] {
            require_option(finetune_cfg.checkpoint, "--checkpoint");
            require_option(finetune_cfg.features, "--features");
            exit_code = cmd_finetune(finetune_cfg, out_dir);
        });

        auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a split");
        add_common(evaluate);
        evaluate->add_option("--checkpoint", evaluate_cfg.checkpoint, "checkpoint path");
        evaluate->add_option("--features", evaluate_cfg.features, "features.csv path");
        evaluate->add_option("--split", evaluate_cfg.split, "train | val | test | all");
        evaluate->add_option("--regime", evaluate_cfg.regime,
                             "report tag: zero_shot | fine_tuned");
        evaluate->callback([&] {
            require_option(evaluate_cfg.checkpoint, "--checkpoint");
            require_option(evaluate_cfg.features, "--features");
            exit_code = cmd_evaluate(evaluate_cfg, out_dir);
        });

        auto* sweep = app.add_subcommand("sweep", "zero-shot vs fine-tuned data-fraction sweep");
        add_common(sweep);
        sweep->add_option("--features", sweep_cfg.features, "human features.csv");
        sweep->add_option("--checkpoint", sweep_cfg.checkpoint, "robot checkpoint");
        sweep->add_option("--fractions", sweep_cfg.fractions, "fractions in (0, 1], ascending");
        sweep->add_option("--seeds", sweep_cfg.seeds, "seeds to average over");
        add_train_options(sweep, sweep_cfg.train);
        sweep->callback([&] {
            require_option(sweep_cfg.features, "--features");
            require_option(sweep_cfg.checkpoint, "--checkpoint");
            exit_code = cmd_sweep(sweep_cfg, out_dir, jobs);
        });

        auto* subjects = app.add_subcommand("subjects", "per-subject ID/OoD protocol table");
        add_common(subjects);
        subjects->add_option("--features", subjects_cfg.features, "human features.csv");
        subjects->add_option("--checkpoint", subjects_cfg.checkpoint, "robot checkpoint");
        subjects->add_option("--seeds", subjects_cfg.seeds, "seeds to average over");
        add_train_options(subjects, subjects_cfg.train);
        subjects->callback([&] {
            require_option(subjects_cfg.features, "--features");
            require_option(subjects_cfg.checkpoint, "--checkpoint");
            exit_code = cmd_subjects(subjects_cfg, out_dir, jobs);
        });

        auto* compare = app.add_subcommand("compare-dist",
                                           "robot vs human raw distribution report");
        add_common(compare);
        compare->add_option("--manifest", compare_cfg.manifest, "manifest path");
        compare->callback([&] {
            require_option(compare_cfg.manifest, "--manifest");
            exit_code = cmd_compare_dist(compare_cfg, out_dir);
        });

        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const toolsense::Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << std::endl;
        return 1;
    }
    return exit_code;
}

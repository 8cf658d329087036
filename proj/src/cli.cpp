#include "toolsense/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>

#include <json.hpp>

#include "toolsense/eval.hpp"
#include "toolsense/features.hpp"
#include "toolsense/ingest.hpp"
#include "toolsense/synth.hpp"

namespace toolsense {

namespace fs = std::filesystem;
using nlohmann::json;

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("TOOLSENSE_LOG");
        if (env == nullptr) return 1;
        const std::string v(env);
        if (v == "error") return -1;
        if (v == "warn") return 0;
        if (v == "debug") return 2;
        return 1;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cout << msg << '\n';
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[debug] " << msg << '\n';
}

namespace {

/// Writes through a temp file and renames, so readers never see partials and
/// interrupted commands leave no half-written artifact under the final name.
void write_atomic(const fs::path& final_path, const std::function<void(const fs::path&)>& writer) {
    fs::path tmp = final_path;
    tmp += ".tmp";
    writer(tmp);
    fs::rename(tmp, final_path);
}

void write_json_atomic(const fs::path& path, const json& j) {
    write_atomic(path, [&](const fs::path& tmp) {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << j.dump(2) << '\n';
    });
}

json train_config_to_json(const TrainConfig& t) {
    return json{{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"fine_tune_lr_scale", t.fine_tune_lr_scale},
                {"momentum", t.momentum},
                {"patience", t.patience},
                {"seed", t.seed},
                {"hidden_dims", t.hidden_dims}};
}

void train_config_from_json(const json& j, TrainConfig& t) {
    t.epochs = j.value("epochs", t.epochs);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.fine_tune_lr_scale = j.value("fine_tune_lr_scale", t.fine_tune_lr_scale);
    t.momentum = j.value("momentum", t.momentum);
    t.patience = j.value("patience", t.patience);
    t.seed = j.value("seed", t.seed);
    t.hidden_dims = j.value("hidden_dims", t.hidden_dims);
}

json load_config_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("config '" + path.string() + "': " + e.what());
    }
    return j;
}

void echo_config(const fs::path& out_dir, const json& j) {
    write_json_atomic(out_dir / "config.echo.json", j);
}

DatasetSpec dataset_spec_from(const GenerateConfig& c) {
    DatasetSpec spec;
    spec.duration_s = c.duration_s;
    spec.rate_hz = c.rate_hz;
    spec.subject_spread = c.subject_spread;
    spec.subjects.push_back({"robot", Source::robot, c.robot_runs_per_task});
    for (int i = 1; i <= c.human_subjects; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "h%02d", i);
        spec.subjects.push_back({name, Source::human, c.human_runs_per_task});
    }
    return spec;
}

std::vector<RunKey> manifest_keys(const Manifest& m) {
    std::vector<RunKey> keys;
    keys.reserve(m.entries.size());
    for (const ManifestEntry& e : m.entries) keys.push_back(e.key());
    return keys;
}

std::vector<RunKey> table_keys(const FeatureTable& table) {
    std::set<RunKey> keys;
    for (const FeatureRow& row : table) keys.insert(row.run);
    return {keys.begin(), keys.end()};
}

json cleaning_report_to_json(const CleaningReport& r) {
    return json{{"windows_examined", r.windows_examined},
                {"windows_removed", r.windows_removed},
                {"removal_fraction", r.removal_fraction},
                {"per_channel_flag_counts", r.per_channel_flag_counts},
                {"all_windows_removed", r.all_windows_removed}};
}

Regime parse_regime(const std::string& s) {
    if (s == "zero_shot") return Regime::zero_shot;
    if (s == "fine_tuned") return Regime::fine_tuned;
    throw ParseError("unknown regime '" + s + "' (expected zero_shot or fine_tuned)");
}

}  // namespace

// ---------------------------------------------------------------------------
// JSON merge helpers shared with main (defined here to keep json.hpp out of
// the public header)
// ---------------------------------------------------------------------------

void apply_json(const json& j, GenerateConfig& c) {
    c.seed = j.value("seed", c.seed);
    c.robot_runs_per_task = j.value("robot_runs_per_task", c.robot_runs_per_task);
    c.human_subjects = j.value("human_subjects", c.human_subjects);
    c.human_runs_per_task = j.value("human_runs_per_task", c.human_runs_per_task);
    c.duration_s = j.value("duration_s", c.duration_s);
    c.rate_hz = j.value("rate_hz", c.rate_hz);
    c.subject_spread = j.value("subject_spread", c.subject_spread);
}

void apply_json(const json& j, IngestConfig& c) {
    c.manifest = j.value("manifest", c.manifest);
    c.window_seconds = j.value("window_seconds", c.window_seconds);
    c.overlap_fraction = j.value("overlap_fraction", c.overlap_fraction);
    c.clean_k = j.value("clean_k", c.clean_k);
}

void apply_json(const json& j, FeaturizeConfig& c) {
    c.manifest = j.value("manifest", c.manifest);
    c.window_seconds = j.value("window_seconds", c.window_seconds);
    c.overlap_fraction = j.value("overlap_fraction", c.overlap_fraction);
    c.clean_k = j.value("clean_k", c.clean_k);
    c.clean = j.value("clean", c.clean);
    c.norm = j.value("norm", c.norm);
}

void apply_json(const json& j, TrainCommandConfig& c) {
    c.features = j.value("features", c.features);
    c.init_checkpoint = j.value("init_checkpoint", c.init_checkpoint);
    c.train_on = j.value("train_on", c.train_on);
    if (j.contains("train")) train_config_from_json(j.at("train"), c.train);
}

void apply_json(const json& j, FinetuneConfig& c) {
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.features = j.value("features", c.features);
    c.fraction = j.value("fraction", c.fraction);
    c.sample_seed = j.value("sample_seed", c.sample_seed);
    if (j.contains("train")) train_config_from_json(j.at("train"), c.train);
}

void apply_json(const json& j, EvaluateConfig& c) {
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.features = j.value("features", c.features);
    c.split = j.value("split", c.split);
    c.regime = j.value("regime", c.regime);
}

void apply_json(const json& j, SweepConfig& c) {
    c.features = j.value("features", c.features);
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.fractions = j.value("fractions", c.fractions);
    c.seeds = j.value("seeds", c.seeds);
    if (j.contains("train")) train_config_from_json(j.at("train"), c.train);
}

void apply_json(const json& j, SubjectsConfig& c) {
    c.features = j.value("features", c.features);
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.seeds = j.value("seeds", c.seeds);
    if (j.contains("train")) train_config_from_json(j.at("train"), c.train);
}

void apply_json(const json& j, CompareDistConfig& c) {
    c.manifest = j.value("manifest", c.manifest);
}

template <typename Config>
void apply_config_file(const fs::path& path, Config& c) {
    apply_json(load_config_json(path), c);
}

template void apply_config_file<GenerateConfig>(const fs::path&, GenerateConfig&);
template void apply_config_file<IngestConfig>(const fs::path&, IngestConfig&);
template void apply_config_file<FeaturizeConfig>(const fs::path&, FeaturizeConfig&);
template void apply_config_file<TrainCommandConfig>(const fs::path&, TrainCommandConfig&);
template void apply_config_file<FinetuneConfig>(const fs::path&, FinetuneConfig&);
template void apply_config_file<EvaluateConfig>(const fs::path&, EvaluateConfig&);
template void apply_config_file<SweepConfig>(const fs::path&, SweepConfig&);
template void apply_config_file<SubjectsConfig>(const fs::path&, SubjectsConfig&);
template void apply_config_file<CompareDistConfig>(const fs::path&, CompareDistConfig&);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_generate(const GenerateConfig& config, const fs::path& out_dir) {
    const DatasetSpec spec = dataset_spec_from(config);
    fs::create_directories(out_dir / "runs");

    Manifest manifest = dataset_manifest(spec);
    std::size_t written = 0;
    for (const SubjectSpec& subject : spec.subjects) {
        for (int task_ord = 0; task_ord < kNumTasks; ++task_ord) {
            for (int run_idx = 0; run_idx < subject.runs_per_task; ++run_idx) {
                const SensorRun run = generate_dataset_run(spec, config.seed, subject,
                                                           static_cast<TaskLabel>(task_ord),
                                                           run_idx);
                const ManifestEntry& entry = manifest.entries[written];
                write_atomic(out_dir / entry.path,
                             [&](const fs::path& tmp) { write_run_csv(run, tmp); });
                ++written;
                log_debug("wrote " + entry.path);
            }
        }
    }

    // Full manifest plus per-source manifests, so the pretraining and
    // fine-tuning pipelines can be featurized independently.
    write_atomic(out_dir / "dataset.manifest.json",
                 [&](const fs::path& tmp) { save_manifest(manifest, tmp); });
    for (Source source : {Source::robot, Source::human}) {
        Manifest filtered;
        for (const ManifestEntry& e : manifest.entries) {
            if (e.source == source) filtered.entries.push_back(e);
        }
        const std::string name = std::string(to_string(source)) + ".manifest.json";
        write_atomic(out_dir / name,
                     [&](const fs::path& tmp) { save_manifest(filtered, tmp); });
    }

    json echo{{"command", "generate"},
              {"seed", config.seed},
              {"robot_runs_per_task", config.robot_runs_per_task},
              {"human_subjects", config.human_subjects},
              {"human_runs_per_task", config.human_runs_per_task},
              {"duration_s", config.duration_s},
              {"rate_hz", config.rate_hz},
              {"subject_spread", config.subject_spread}};
    echo_config(out_dir, echo);
    log_info("generated " + std::to_string(written) + " runs into " + out_dir.string());
    return 0;
}

int cmd_ingest(const IngestConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const Manifest manifest = load_manifest(config.manifest);
    const std::vector<SensorRun> runs = load_all_runs(manifest);
    const RunLookup lookup(runs);

    std::size_t total_samples = 0;
    double total_duration = 0.0;
    std::size_t human_runs = 0, robot_runs = 0;
    for (const SensorRun& run : runs) {
        total_samples += run.samples.size();
        total_duration += run.duration_seconds();
        (run.source == Source::human ? human_runs : robot_runs) += 1;
    }

    const WindowParams wp{config.window_seconds, config.overlap_fraction};
    std::size_t too_short = 0;
    std::vector<Window> windows;
    for (const SensorRun& run : runs) {
        WindowingResult r = make_windows(run, wp);
        if (r.run_too_short) ++too_short;
        windows.insert(windows.end(), r.windows.begin(), r.windows.end());
    }

    json summary{{"runs", runs.size()},
                 {"human_runs", human_runs},
                 {"robot_runs", robot_runs},
                 {"total_samples", total_samples},
                 {"total_duration_s", total_duration},
                 {"windows", windows.size()},
                 {"runs_too_short_for_window", too_short}};
    if (!windows.empty()) {
        const CleaningResult cleaned = clean_outliers(lookup, windows, config.clean_k);
        summary["cleaning"] = cleaning_report_to_json(cleaned.report);
    }

    write_json_atomic(out_dir / "ingest.summary.json", summary);
    json echo{{"command", "ingest"},
              {"manifest", config.manifest},
              {"window_seconds", config.window_seconds},
              {"overlap_fraction", config.overlap_fraction},
              {"clean_k", config.clean_k}};
    echo_config(out_dir, echo);
    log_info("ingested " + std::to_string(runs.size()) + " runs, " +
             std::to_string(windows.size()) + " windows");
    return 0;
}

int cmd_featurize(const FeaturizeConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const Manifest manifest = load_manifest(config.manifest);
    const std::vector<SensorRun> runs = load_all_runs(manifest);
    const RunLookup lookup(runs);

    const WindowParams wp{config.window_seconds, config.overlap_fraction};
    std::vector<Window> windows = make_all_windows(runs, wp);
    if (windows.empty()) {
        throw DataError("featurize: no run is long enough for a single window");
    }

    CleaningReport report;
    report.windows_examined = windows.size();
    if (config.clean) {
        CleaningResult cleaned = clean_outliers(lookup, windows, config.clean_k);
        report = cleaned.report;
        windows = std::move(cleaned.kept);
        if (windows.empty()) {
            throw DataError("featurize: cleaning removed every window; raise clean_k");
        }
    }

    FeatureTable table = build_feature_table(lookup, windows);

    // Normalization is fitted on the canonical training split only and
    // applied (with clamping) everywhere else. With --norm an existing fit is
    // reused so fine-tuning operates in the pretraining feature space.
    NormalizationParams norm;
    if (config.norm.empty()) {
        const SplitSpec split = build_splits(manifest_keys(manifest), SplitMode::in_distribution);
        std::vector<FeatureVector> train_vectors;
        for (const FeatureRow& row : table) {
            if (split.train_runs.count(row.run) > 0) train_vectors.push_back(row.features);
        }
        if (train_vectors.empty()) {
            throw DataError("featurize: training split is empty after cleaning");
        }
        norm = fit_normalization(train_vectors, "train split of " + config.manifest);
    } else {
        norm = load_normalization(config.norm);
    }
    for (FeatureRow& row : table) {
        row.features = apply_normalization(row.features, norm);
    }

    write_atomic(out_dir / "features.csv",
                 [&](const fs::path& tmp) { write_feature_csv(table, tmp); });
    write_atomic(out_dir / "normalization.json",
                 [&](const fs::path& tmp) { save_normalization(norm, tmp); });
    write_json_atomic(out_dir / "cleaning.json", cleaning_report_to_json(report));

    json echo{{"command", "featurize"},
              {"manifest", config.manifest},
              {"window_seconds", config.window_seconds},
              {"overlap_fraction", config.overlap_fraction},
              {"clean_k", config.clean_k},
              {"clean", config.clean},
              {"norm", config.norm}};
    echo_config(out_dir, echo);
    log_info("featurized " + std::to_string(table.size()) + " windows (" +
             std::to_string(report.windows_removed) + " removed by cleaning)");
    return 0;
}

namespace {

void write_train_log_csv(const std::vector<EpochStats>& log, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << "epoch,train_loss,val_accuracy\n";
    char buf[96];
    for (const EpochStats& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", e.epoch, e.train_loss,
                      e.val_accuracy);
        out << buf;
    }
}

}  // namespace

int cmd_train(const TrainCommandConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const FeatureTable table = read_feature_csv(config.features);
    const SplitSpec split = build_splits(table_keys(table), SplitMode::in_distribution);
    std::vector<Example> train_set, val_set;
    if (config.train_on == "all") {
        std::set<RunKey> all;
        for (const FeatureRow& row : table) all.insert(row.run);
        train_set = gather_examples(table, all);
        val_set = train_set;
    } else if (config.train_on == "train") {
        train_set = gather_examples(table, split.train_runs);
        val_set = gather_examples(table, split.val_runs);
    } else {
        throw ParseError("unknown --train-on '" + config.train_on + "' (expected train or all)");
    }
    const std::vector<Example> test_set = gather_examples(table, split.test_runs);

    TrainResult result;
    Regime regime = Regime::zero_shot;
    if (config.init_checkpoint.empty()) {
        result = train(train_set, val_set, config.train, InitMode::random_init);
    } else {
        const Checkpoint init = load_checkpoint(config.init_checkpoint);
        result = train(train_set, val_set, config.train, InitMode::from_checkpoint, &init.params);
        regime = Regime::fine_tuned;
    }

    const Provenance provenance{data_fingerprint(train_set), config.train.seed,
                                config.train.epochs};
    write_atomic(out_dir / "checkpoint.ckpt", [&](const fs::path& tmp) {
        save_checkpoint(result.params, provenance, tmp);
    });
    write_atomic(out_dir / "train_log.csv",
                 [&](const fs::path& tmp) { write_train_log_csv(result.log, tmp); });

    EvalReport report = evaluate(result.params, test_set);
    report.regime = regime;
    report.split = split;
    report.seed = config.train.seed;
    write_atomic(out_dir / "report.json",
                 [&](const fs::path& tmp) { write_eval_report_json(report, tmp); });

    json echo{{"command", "train"},
              {"features", config.features},
              {"init_checkpoint", config.init_checkpoint},
              {"train_on", config.train_on},
              {"train", train_config_to_json(config.train)}};
    echo_config(out_dir, echo);
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "trained on %zu windows; best val %.4f at epoch %d; test accuracy %.4f",
                  train_set.size(), result.best_val_accuracy, result.best_epoch, report.accuracy);
    log_info(msg);
    return 0;
}

int cmd_finetune(const FinetuneConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const Checkpoint init = load_checkpoint(config.checkpoint);
    const FeatureTable table = read_feature_csv(config.features);
    const SplitSpec split = build_splits(table_keys(table), SplitMode::in_distribution);
    const std::vector<Example> pool = gather_examples(table, split.train_runs);
    const std::vector<Example> val_set = gather_examples(table, split.val_runs);
    const std::vector<Example> test_set = gather_examples(table, split.test_runs);

    const std::vector<Example> subset =
        stratified_fraction(pool, config.fraction, config.sample_seed);
    const TrainResult result =
        train(subset, val_set, config.train, InitMode::from_checkpoint, &init.params);

    const Provenance provenance{data_fingerprint(subset), config.train.seed,
                                config.train.epochs};
    write_atomic(out_dir / "checkpoint.ckpt", [&](const fs::path& tmp) {
        save_checkpoint(result.params, provenance, tmp);
    });
    write_atomic(out_dir / "train_log.csv",
                 [&](const fs::path& tmp) { write_train_log_csv(result.log, tmp); });

    EvalReport report = evaluate(result.params, test_set);
    report.regime = Regime::fine_tuned;
    report.fraction = config.fraction;
    report.split = split;
    report.seed = config.train.seed;
    write_atomic(out_dir / "report.json",
                 [&](const fs::path& tmp) { write_eval_report_json(report, tmp); });

    json echo{{"command", "finetune"},
              {"checkpoint", config.checkpoint},
              {"features", config.features},
              {"fraction", config.fraction},
              {"sample_seed", config.sample_seed},
              {"train", train_config_to_json(config.train)}};
    echo_config(out_dir, echo);
    char msg[128];
    std::snprintf(msg, sizeof(msg), "fine-tuned on %zu windows (fraction %.2f); test accuracy %.4f",
                  subset.size(), config.fraction, report.accuracy);
    log_info(msg);
    return 0;
}

int cmd_evaluate(const EvaluateConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const Checkpoint ckpt = load_checkpoint(config.checkpoint);
    const FeatureTable table = read_feature_csv(config.features);
    const SplitSpec split = build_splits(table_keys(table), SplitMode::in_distribution);

    std::vector<Example> examples;
    if (config.split == "all") {
        std::set<RunKey> all;
        for (const FeatureRow& row : table) all.insert(row.run);
        examples = gather_examples(table, all);
    } else if (config.split == "train") {
        examples = gather_examples(table, split.train_runs);
    } else if (config.split == "val") {
        examples = gather_examples(table, split.val_runs);
    } else if (config.split == "test") {
        examples = gather_examples(table, split.test_runs);
    } else {
        throw ParseError("unknown split '" + config.split +
                         "' (expected train, val, test, or all)");
    }

    EvalReport report = evaluate(ckpt.params, examples);
    report.regime = parse_regime(config.regime);
    report.split = split;
    report.seed = ckpt.provenance.seed;
    write_atomic(out_dir / "report.json",
                 [&](const fs::path& tmp) { write_eval_report_json(report, tmp); });

    json echo{{"command", "evaluate"},
              {"checkpoint", config.checkpoint},
              {"features", config.features},
              {"split", config.split},
              {"regime", config.regime}};
    echo_config(out_dir, echo);
    char msg[96];
    std::snprintf(msg, sizeof(msg), "accuracy %.4f on %zu windows", report.accuracy,
                  examples.size());
    log_info(msg);
    return 0;
}

int cmd_sweep(const SweepConfig& config, const fs::path& out_dir, int jobs) {
    fs::create_directories(out_dir);
    const Checkpoint ckpt = load_checkpoint(config.checkpoint);
    const FeatureTable table = read_feature_csv(config.features);
    const SplitSpec split = build_splits(table_keys(table), SplitMode::in_distribution);

    const SweepTable result = fraction_sweep(table, split, ckpt.params, config.fractions,
                                             config.seeds, config.train, jobs);
    write_atomic(out_dir / "sweep.csv",
                 [&](const fs::path& tmp) { write_sweep_csv(result, tmp); });
    write_atomic(out_dir / "sweep.svg",
                 [&](const fs::path& tmp) { write_sweep_svg(result, tmp); });

    json echo{{"command", "sweep"},
              {"features", config.features},
              {"checkpoint", config.checkpoint},
              {"fractions", config.fractions},
              {"seeds", config.seeds},
              {"train", train_config_to_json(config.train)}};
    echo_config(out_dir, echo);
    if (!config.fractions.empty()) {
        const double f0 = config.fractions.front();
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "sweep done; at fraction %.2f: zero_shot %.4f vs fine_tuned %.4f", f0,
                      result.mean_accuracy(f0, Regime::zero_shot),
                      result.mean_accuracy(f0, Regime::fine_tuned));
        log_info(msg);
    }
    return 0;
}

int cmd_subjects(const SubjectsConfig& config, const fs::path& out_dir, int jobs) {
    fs::create_directories(out_dir);
    const Checkpoint ckpt = load_checkpoint(config.checkpoint);
    const FeatureTable table = read_feature_csv(config.features);

    const SubjectProtocolResult result =
        subject_protocol(table, ckpt.params, config.seeds, config.train, jobs);
    write_atomic(out_dir / "subjects.csv",
                 [&](const fs::path& tmp) { write_subjects_csv(result, tmp); });

    json echo{{"command", "subjects"},
              {"features", config.features},
              {"checkpoint", config.checkpoint},
              {"seeds", config.seeds},
              {"train", train_config_to_json(config.train)}};
    echo_config(out_dir, echo);
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "subject protocol done; mean fine-tune boost %+.4f (ID %.4f, OoD %.4f)",
                  result.mean_boost, result.mean_id_fine_tuned, result.mean_ood_fine_tuned);
    log_info(msg);
    return 0;
}

int cmd_compare_dist(const CompareDistConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const Manifest manifest = load_manifest(config.manifest);
    const std::vector<SensorRun> runs = load_all_runs(manifest);

    const DistributionReport report = distribution_report(runs);
    write_atomic(out_dir / "distribution.csv",
                 [&](const fs::path& tmp) { write_distribution_csv(report, tmp); });
    write_atomic(out_dir / "boxplot.svg",
                 [&](const fs::path& tmp) { write_boxplot_svg(report, tmp); });

    json echo{{"command", "compare-dist"}, {"manifest", config.manifest}};
    echo_config(out_dir, echo);
    log_info("distribution report over " + std::to_string(runs.size()) + " runs written");
    return 0;
}

}  // namespace toolsense

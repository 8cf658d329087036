#include "toolsense/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "toolsense/rng.hpp"

namespace toolsense {

namespace {

/// Runs fn(0..count) on up to `jobs` worker threads. Each index writes only
/// its own result slot, so scheduling cannot change any output.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t worker_count = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    std::vector<std::thread> workers;
    workers.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

nlohmann::json split_to_json(const SplitSpec& split) {
    auto keys = [](const std::set<RunKey>& s) {
        nlohmann::json arr = nlohmann::json::array();
        for (const RunKey& k : s) arr.push_back(k.to_string());
        return arr;
    };
    return nlohmann::json{
        {"mode", split.mode == SplitMode::in_distribution ? "in_distribution"
                                                          : "out_of_distribution"},
        {"held_out_subject", split.held_out_subject},
        {"train_runs", keys(split.train_runs)},
        {"val_runs", keys(split.val_runs)},
        {"test_runs", keys(split.test_runs)},
    };
}

void append_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

const char* to_string(Regime r) {
    return r == Regime::zero_shot ? "zero_shot" : "fine_tuned";
}

SplitSpec build_splits(std::span<const RunKey> runs, SplitMode mode,
                       const std::string& held_out_subject) {
    SplitSpec split;
    split.mode = mode;
    split.held_out_subject = mode == SplitMode::out_of_distribution ? held_out_subject : "";

    if (mode == SplitMode::out_of_distribution) {
        const bool present = std::any_of(runs.begin(), runs.end(), [&](const RunKey& k) {
            return k.subject_id == held_out_subject;
        });
        if (!present) {
            throw Error("build_splits: held-out subject '" + held_out_subject +
                        "' has no runs in the manifest");
        }
    }

    std::map<std::pair<std::string, TaskLabel>, std::vector<RunKey>> groups;
    for (const RunKey& k : runs) {
        if (mode == SplitMode::out_of_distribution && k.subject_id == held_out_subject) {
            split.test_runs.insert(k);
            continue;
        }
        groups[{k.subject_id, k.task}].push_back(k);
    }

    for (auto& [group, keys] : groups) {
        std::sort(keys.begin(), keys.end(),
                  [](const RunKey& a, const RunKey& b) { return a.run_index < b.run_index; });
        const std::size_t r = keys.size();
        const std::size_t n_val = r / 3;
        const std::size_t n_test = r / 3;
        const std::size_t n_train = r - n_val - n_test;  // remainder goes to train
        for (std::size_t i = 0; i < r; ++i) {
            if (i < n_train) {
                split.train_runs.insert(keys[i]);
            } else if (i < n_train + n_val) {
                split.val_runs.insert(keys[i]);
            } else {
                split.test_runs.insert(keys[i]);
            }
        }
    }

    validate_split(split);
    return split;
}

std::vector<Example> gather_examples(const FeatureTable& table, const std::set<RunKey>& runs) {
    std::vector<Example> out;
    for (const FeatureRow& row : table) {
        if (runs.count(row.run) == 0) continue;
        Example ex;
        ex.x.assign(row.features.values.begin(), row.features.values.end());
        ex.label = static_cast<int>(row.label());
        out.push_back(std::move(ex));
    }
    return out;
}

EvalReport evaluate(const MlpParams& params, std::span<const Example> test) {
    if (test.empty()) {
        throw ContractViolation("evaluate: empty test set");
    }
    EvalReport report;
    std::int64_t hits = 0;
    for (const Example& ex : test) {
        const int predicted = predict(params, ex.x);
        ++report.confusion[static_cast<std::size_t>(ex.label)][static_cast<std::size_t>(predicted)];
        if (predicted == ex.label) ++hits;
    }
    report.accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
    return report;
}

void write_eval_report_json(const EvalReport& report, const std::filesystem::path& path) {
    nlohmann::json confusion = nlohmann::json::array();
    for (const auto& row : report.confusion) {
        confusion.push_back(row);
    }
    nlohmann::json j{
        {"accuracy", report.accuracy},
        {"confusion", confusion},
        {"regime", to_string(report.regime)},
        {"fraction", report.fraction},
        {"seed", report.seed},
        {"split", split_to_json(report.split)},
    };
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

double SweepTable::mean_accuracy(double fraction, Regime regime) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const SweepPoint& p : points) {
        if (p.skipped || p.regime != regime || p.fraction != fraction) continue;
        sum += p.accuracy;
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

StratifiedDraw stratified_indices(std::span<const Example> pool, double fraction,
                                  std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ContractViolation("stratified_indices: fraction must lie in (0, 1]");
    }
    std::array<std::vector<std::size_t>, kNumTasks> by_class;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const int label = pool[i].label;
        if (label < 0 || label >= kNumTasks) {
            throw ContractViolation("stratified_indices: label outside [0, 4)");
        }
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }
    StratifiedDraw draw;
    for (int c = 0; c < kNumTasks; ++c) {
        std::vector<std::size_t>& order = by_class[static_cast<std::size_t>(c)];
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(c) + 101));
        rng.shuffle(order);
        const auto take = static_cast<std::size_t>(
            std::floor(fraction * static_cast<double>(order.size()) + 1e-9));
        if (take == 0) {
            draw.empty_class = c;
            draw.indices.clear();
            return draw;
        }
        draw.indices.insert(draw.indices.end(), order.begin(),
                            order.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return draw;
}

std::vector<Example> stratified_fraction(std::span<const Example> pool, double fraction,
                                         std::uint64_t seed) {
    const StratifiedDraw draw = stratified_indices(pool, fraction, seed);
    if (draw.empty_class >= 0) {
        throw Error("stratified_fraction: fraction " + std::to_string(fraction) +
                    " yields no samples of class " +
                    to_string(static_cast<TaskLabel>(draw.empty_class)));
    }
    std::vector<Example> subset;
    subset.reserve(draw.indices.size());
    for (std::size_t i : draw.indices) subset.push_back(pool[i]);
    return subset;
}

SweepTable fraction_sweep(const FeatureTable& human, const SplitSpec& split,
                          const MlpParams& robot_checkpoint, std::span<const double> fractions,
                          std::span<const std::uint64_t> seeds, const TrainConfig& config,
                          int jobs) {
    if (!std::is_sorted(fractions.begin(), fractions.end())) {
        throw ContractViolation("fraction_sweep: fractions must be sorted ascending");
    }
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw ContractViolation("fraction_sweep: fractions must lie in (0, 1]");
        }
    }

    const std::vector<Example> train_pool = gather_examples(human, split.train_runs);
    const std::vector<Example> val_set = gather_examples(human, split.val_runs);
    const std::vector<Example> test_set = gather_examples(human, split.test_runs);
    if (train_pool.empty() || val_set.empty() || test_set.empty()) {
        throw ContractViolation("fraction_sweep: split produced an empty train/val/test set");
    }

    struct Job {
        double fraction;
        std::uint64_t seed;
        Regime regime;
        std::vector<std::size_t> subset;  // indices into train_pool
        bool skipped = false;
        std::string note;
    };
    std::vector<Job> grid;
    for (std::uint64_t seed : seeds) {
        for (double fraction : fractions) {
            StratifiedDraw draw = stratified_indices(train_pool, fraction, seed);
            const bool skipped = draw.empty_class >= 0;
            const std::string note =
                skipped ? "no samples of class " +
                              std::string(to_string(static_cast<TaskLabel>(draw.empty_class))) +
                              " at this fraction"
                        : "";
            for (Regime regime : {Regime::zero_shot, Regime::fine_tuned}) {
                grid.push_back(Job{fraction, seed, regime, draw.indices, skipped, note});
            }
        }
    }

    SweepTable table;
    table.points.resize(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t i) {
        const Job& job = grid[i];
        SweepPoint& point = table.points[i];
        point.fraction = job.fraction;
        point.seed = job.seed;
        point.regime = job.regime;
        point.skipped = job.skipped;
        point.note = job.note;
        if (job.skipped) return;

        std::vector<Example> subset;
        subset.reserve(job.subset.size());
        for (std::size_t idx : job.subset) subset.push_back(train_pool[idx]);

        TrainConfig tc = config;
        tc.seed = job.seed;
        const TrainResult trained =
            job.regime == Regime::zero_shot
                ? train(subset, val_set, tc, InitMode::random_init)
                : train(subset, val_set, tc, InitMode::from_checkpoint, &robot_checkpoint);
        point.accuracy = evaluate(trained.params, test_set).accuracy;
    });
    return table;
}

void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << "fraction,seed,regime,accuracy,note\n";
    for (const SweepPoint& p : table.points) {
        std::string line;
        append_double(line, p.fraction);
        line += ',';
        line += std::to_string(p.seed);
        line += ',';
        line += to_string(p.regime);
        line += ',';
        if (p.skipped) {
            line += ",skipped: " + p.note;
        } else {
            append_double(line, p.accuracy);
            line += ',';
        }
        out << line << '\n';
    }
}

// ---------------------------------------------------------------------------
// Subject protocol
// ---------------------------------------------------------------------------

SubjectProtocolResult subject_protocol(const FeatureTable& human,
                                       const MlpParams& robot_checkpoint,
                                       std::span<const std::uint64_t> seeds,
                                       const TrainConfig& config, int jobs) {
    if (seeds.empty()) {
        throw ContractViolation("subject_protocol: need at least one seed");
    }

    std::set<RunKey> all_keys_set;
    std::set<std::string> subject_set;
    for (const FeatureRow& row : human) {
        all_keys_set.insert(row.run);
        subject_set.insert(row.run.subject_id);
    }
    const std::vector<RunKey> all_keys(all_keys_set.begin(), all_keys_set.end());
    const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
    if (subjects.size() < 2) {
        throw ContractViolation("subject_protocol: need at least two subjects");
    }

    // In-distribution: one model per (regime, seed), trained on everyone.
    const SplitSpec id_split = build_splits(all_keys, SplitMode::in_distribution);
    const std::vector<Example> id_train = gather_examples(human, id_split.train_runs);
    const std::vector<Example> id_val = gather_examples(human, id_split.val_runs);

    // Per-subject test sets under the ID split.
    std::map<std::string, std::vector<Example>> id_subject_test;
    for (const std::string& s : subjects) {
        std::set<RunKey> keys;
        for (const RunKey& k : id_split.test_runs) {
            if (k.subject_id == s) keys.insert(k);
        }
        id_subject_test[s] = gather_examples(human, keys);
    }

    struct IdJob {
        std::uint64_t seed;
        Regime regime;
        std::map<std::string, double> per_subject;
    };
    std::vector<IdJob> id_jobs;
    for (std::uint64_t seed : seeds) {
        id_jobs.push_back({seed, Regime::zero_shot, {}});
        id_jobs.push_back({seed, Regime::fine_tuned, {}});
    }
    parallel_for(id_jobs.size(), jobs, [&](std::size_t i) {
        IdJob& job = id_jobs[i];
        TrainConfig tc = config;
        tc.seed = job.seed;
        const TrainResult trained =
            job.regime == Regime::zero_shot
                ? train(id_train, id_val, tc, InitMode::random_init)
                : train(id_train, id_val, tc, InitMode::from_checkpoint, &robot_checkpoint);
        for (const std::string& s : subjects) {
            job.per_subject[s] = evaluate(trained.params, id_subject_test.at(s)).accuracy;
        }
    });

    // Out-of-distribution: per subject, trained with that subject excluded,
    // scored on every window of that subject.
    struct OodJob {
        std::string subject;
        std::uint64_t seed;
        Regime regime;
        double accuracy = 0.0;
    };
    std::vector<OodJob> ood_jobs;
    for (const std::string& s : subjects) {
        for (std::uint64_t seed : seeds) {
            ood_jobs.push_back({s, seed, Regime::zero_shot, 0.0});
            ood_jobs.push_back({s, seed, Regime::fine_tuned, 0.0});
        }
    }
    parallel_for(ood_jobs.size(), jobs, [&](std::size_t i) {
        OodJob& job = ood_jobs[i];
        const SplitSpec split = build_splits(all_keys, SplitMode::out_of_distribution, job.subject);
        const std::vector<Example> train_set = gather_examples(human, split.train_runs);
        const std::vector<Example> val_set = gather_examples(human, split.val_runs);
        const std::vector<Example> test_set = gather_examples(human, split.test_runs);
        TrainConfig tc = config;
        tc.seed = job.seed;
        const TrainResult trained =
            job.regime == Regime::zero_shot
                ? train(train_set, val_set, tc, InitMode::random_init)
                : train(train_set, val_set, tc, InitMode::from_checkpoint, &robot_checkpoint);
        job.accuracy = evaluate(trained.params, test_set).accuracy;
    });

    SubjectProtocolResult result;
    const auto seed_count = static_cast<double>(seeds.size());
    for (const std::string& s : subjects) {
        SubjectOutcome outcome;
        outcome.subject = s;
        for (const IdJob& job : id_jobs) {
            (job.regime == Regime::zero_shot ? outcome.id_zero_shot : outcome.id_fine_tuned) +=
                job.per_subject.at(s) / seed_count;
        }
        for (const OodJob& job : ood_jobs) {
            if (job.subject != s) continue;
            (job.regime == Regime::zero_shot ? outcome.ood_zero_shot : outcome.ood_fine_tuned) +=
                job.accuracy / seed_count;
        }
        result.subjects.push_back(std::move(outcome));
    }

    const auto n = static_cast<double>(result.subjects.size());
    for (const SubjectOutcome& o : result.subjects) {
        result.mean_boost += (o.id_boost() + o.ood_boost()) / (2.0 * n);
        result.mean_id_fine_tuned += o.id_fine_tuned / n;
        result.mean_ood_fine_tuned += o.ood_fine_tuned / n;
    }
    return result;
}

void write_subjects_csv(const SubjectProtocolResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << "subject,id_zero_shot,id_fine_tuned,id_boost,ood_zero_shot,ood_fine_tuned,ood_boost\n";
    for (const SubjectOutcome& o : result.subjects) {
        std::string line = o.subject;
        for (double v : {o.id_zero_shot, o.id_fine_tuned, o.id_boost(), o.ood_zero_shot,
                         o.ood_fine_tuned, o.ood_boost()}) {
            line += ',';
            append_double(line, v);
        }
        out << line << '\n';
    }
    std::string line = "mean,,";
    append_double(line, result.mean_id_fine_tuned);
    line += ",,,";
    append_double(line, result.mean_ood_fine_tuned);
    line += ',';
    append_double(line, result.mean_boost);
    out << line << '\n';
}

// ---------------------------------------------------------------------------
// Distribution comparison
// ---------------------------------------------------------------------------

double quantile_type7(std::span<const double> sorted_values, double p) {
    if (sorted_values.empty()) {
        throw ContractViolation("quantile_type7: empty input");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ContractViolation("quantile_type7: p outside [0, 1]");
    }
    const std::size_t n = sorted_values.size();
    if (n == 1) return sorted_values[0];
    const double h = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return sorted_values[n - 1];
    const double w = h - static_cast<double>(lo);
    return sorted_values[lo] + w * (sorted_values[lo + 1] - sorted_values[lo]);
}

BoxStats boxplot_stats(std::vector<double> values) {
    if (values.empty()) {
        throw ContractViolation("boxplot_stats: empty input");
    }
    std::sort(values.begin(), values.end());
    BoxStats b;
    b.q1 = quantile_type7(values, 0.25);
    b.median = quantile_type7(values, 0.5);
    b.q3 = quantile_type7(values, 0.75);
    const double iqr = b.q3 - b.q1;
    b.whisker_low = b.q1 - 1.5 * iqr;
    b.whisker_high = b.q3 + 1.5 * iqr;
    for (double v : values) {
        if (v < b.whisker_low || v > b.whisker_high) ++b.outlier_count;
    }
    return b;
}

DistributionReport distribution_report(std::span<const SensorRun> runs) {
    bool has_human = false, has_robot = false;
    for (const SensorRun& run : runs) {
        (run.source == Source::human ? has_human : has_robot) = true;
    }
    if (!has_human) throw DataError("distribution_report: no runs from source 'human'");
    if (!has_robot) throw DataError("distribution_report: no runs from source 'robot'");

    DistributionReport report;
    std::vector<double> human_values, robot_values;
    for (int c = 0; c < kNumChannels; ++c) {
        human_values.clear();
        robot_values.clear();
        for (const SensorRun& run : runs) {
            std::vector<double>& dst =
                run.source == Source::human ? human_values : robot_values;
            for (const SensorSample& s : run.samples) {
                dst.push_back(s.values[static_cast<std::size_t>(c)]);
            }
        }
        ChannelDistribution& ch = report.channels[static_cast<std::size_t>(c)];
        ch.human = boxplot_stats(human_values);
        ch.robot = boxplot_stats(robot_values);

        const double lo = std::max(ch.human.q1, ch.robot.q1);
        const double hi = std::min(ch.human.q3, ch.robot.q3);
        const double inter = std::max(0.0, hi - lo);
        const double union_len = (ch.human.q3 - ch.human.q1) + (ch.robot.q3 - ch.robot.q1) - inter;
        if (union_len > 0.0) {
            ch.iqr_overlap = inter / union_len;
        } else {
            // Both IQRs degenerate to points; overlap is all-or-nothing.
            ch.iqr_overlap =
                (ch.human.q1 == ch.robot.q1 && ch.human.q3 == ch.robot.q3) ? 1.0 : 0.0;
        }
    }
    return report;
}

void write_distribution_csv(const DistributionReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << "channel,source,q1,median,q3,whisker_low,whisker_high,outlier_count,iqr_overlap\n";
    for (int c = 0; c < kNumChannels; ++c) {
        const ChannelDistribution& ch = report.channels[static_cast<std::size_t>(c)];
        for (const auto& [source, box] :
             {std::pair<const char*, const BoxStats*>{"human", &ch.human},
              std::pair<const char*, const BoxStats*>{"robot", &ch.robot}}) {
            std::string line = to_string(static_cast<ChannelId>(c));
            line += ',';
            line += source;
            for (double v : {box->q1, box->median, box->q3, box->whisker_low, box->whisker_high}) {
                line += ',';
                append_double(line, v);
            }
            line += ',';
            line += std::to_string(box->outlier_count);
            line += ',';
            append_double(line, ch.iqr_overlap);
            out << line << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// SVG output (hand-rolled; no plotting dependency)
// ---------------------------------------------------------------------------

namespace {

struct SvgCanvas {
    std::ostringstream body;
    int width;
    int height;

    SvgCanvas(int w, int h) : width(w), height(h) {}

    void line(double x1, double y1, double x2, double y2, const char* stroke, double sw = 1.0) {
        body << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
             << "\" stroke=\"" << stroke << "\" stroke-width=\"" << sw << "\"/>\n";
    }
    void rect(double x, double y, double w, double h, const char* fill, const char* stroke) {
        body << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
             << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 11,
              const char* anchor = "middle") {
        body << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
             << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
             << "</text>\n";
    }
    void circle(double x, double y, double r, const char* fill) {
        body << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r << "\" fill=\"" << fill
             << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke) {
        body << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : pts) body << x << ',' << y << ' ';
        body << "\"/>\n";
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot open '" + path.string() + "' for writing");
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
            << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << body.str() << "</svg>\n";
    }
};

std::string format_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

}  // namespace

void write_sweep_svg(const SweepTable& table, const std::filesystem::path& path) {
    std::vector<double> fractions;
    for (const SweepPoint& p : table.points) {
        if (!p.skipped &&
            std::find(fractions.begin(), fractions.end(), p.fraction) == fractions.end()) {
            fractions.push_back(p.fraction);
        }
    }
    std::sort(fractions.begin(), fractions.end());

    const int w = 640, h = 420, ml = 60, mr = 20, mt = 30, mb = 50;
    SvgCanvas svg(w, h);
    auto sx = [&](double f) { return ml + f * (w - ml - mr); };
    auto sy = [&](double acc) { return h - mb - acc * (h - mt - mb); };

    svg.line(ml, h - mb, w - mr, h - mb, "black");
    svg.line(ml, mt, ml, h - mb, "black");
    for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        svg.line(ml - 4, sy(tick), ml, sy(tick), "black");
        svg.text(ml - 8, sy(tick) + 4, format_short(tick), 11, "end");
        svg.line(sx(tick), h - mb, sx(tick), h - mb + 4, "black");
        svg.text(sx(tick), h - mb + 18, format_short(tick), 11);
    }
    svg.text((ml + w - mr) / 2.0, h - 12, "fraction of human training windows");
    svg.text(14, (mt + h - mb) / 2.0, "accuracy", 11);
    svg.text((ml + w - mr) / 2.0, 18, "zero-shot vs fine-tuned accuracy by data fraction");

    const char* colors[2] = {"#d62728", "#2ca02c"};
    for (Regime regime : {Regime::zero_shot, Regime::fine_tuned}) {
        std::vector<std::pair<double, double>> pts;
        for (double f : fractions) {
            pts.emplace_back(sx(f), sy(table.mean_accuracy(f, regime)));
        }
        const char* color = colors[static_cast<int>(regime)];
        svg.polyline(pts, color);
        for (const auto& [x, y] : pts) svg.circle(x, y, 3, color);
    }
    svg.rect(ml + 10, mt + 8, 12, 12, colors[0], "none");
    svg.text(ml + 28, mt + 18, "zero_shot", 11, "start");
    svg.rect(ml + 110, mt + 8, 12, 12, colors[1], "none");
    svg.text(ml + 128, mt + 18, "fine_tuned", 11, "start");
    svg.save(path);
}

void write_boxplot_svg(const DistributionReport& report, const std::filesystem::path& path) {
    const int w = 1100, h = 420, ml = 40, mb = 70, mt = 40;
    SvgCanvas svg(w, h);
    const double slot = (w - ml - 20) / static_cast<double>(kNumChannels);
    svg.text(w / 2.0, 20, "raw value distribution per channel: human vs robot");

    for (int c = 0; c < kNumChannels; ++c) {
        const ChannelDistribution& ch = report.channels[static_cast<std::size_t>(c)];
        const double x0 = ml + slot * c;

        // Each channel is drawn on its own vertical scale covering both
        // whisker ranges; raw units differ too much for a shared axis.
        double lo = std::min(ch.human.whisker_low, ch.robot.whisker_low);
        double hi = std::max(ch.human.whisker_high, ch.robot.whisker_high);
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        auto sy = [&](double v) { return h - mb - (v - lo) / (hi - lo) * (h - mt - mb); };

        const char* fills[2] = {"#9ecae1", "#fdae6b"};
        const BoxStats* boxes[2] = {&ch.human, &ch.robot};
        for (int s = 0; s < 2; ++s) {
            const BoxStats& b = *boxes[s];
            const double bx = x0 + 8 + s * (slot / 2.0 - 6);
            const double bw = slot / 2.0 - 14;
            const double cx = bx + bw / 2.0;
            svg.line(cx, sy(b.whisker_low), cx, sy(b.q1), "black");
            svg.line(cx, sy(b.q3), cx, sy(b.whisker_high), "black");
            svg.line(cx - bw / 3, sy(b.whisker_low), cx + bw / 3, sy(b.whisker_low), "black");
            svg.line(cx - bw / 3, sy(b.whisker_high), cx + bw / 3, sy(b.whisker_high), "black");
            svg.rect(bx, sy(b.q3), bw, sy(b.q1) - sy(b.q3), fills[s], "black");
            svg.line(bx, sy(b.median), bx + bw, sy(b.median), "black", 2.0);
            if (b.outlier_count > 0) {
                svg.text(cx, sy(b.whisker_high) - 6, std::to_string(b.outlier_count), 9);
            }
        }
        svg.text(x0 + slot / 2.0, h - mb + 16, to_string(static_cast<ChannelId>(c)), 10);
        svg.text(x0 + slot / 2.0, h - mb + 32, "ovl " + format_short(ch.iqr_overlap), 9);
    }
    svg.rect(ml, h - 24, 12, 12, "#9ecae1", "black");
    svg.text(ml + 18, h - 14, "human", 11, "start");
    svg.rect(ml + 90, h - 24, 12, 12, "#fdae6b", "black");
    svg.text(ml + 108, h - 14, "robot", 11, "start");
    svg.save(path);
}

}  // namespace toolsense

#include "toolsense/types.hpp"

#include <cmath>
#include <sstream>

namespace toolsense {

namespace {

constexpr const char* kChannelNames[kNumChannels] = {
    "accel_x", "accel_y", "accel_z", "gyro_x", "gyro_y", "gyro_z",
    "mag_x",   "mag_y",   "mag_z",   "mic",    "current",
};

constexpr const char* kTaskNames[kNumTasks] = {
    "cutting", "engraving", "routing", "sanding",
};

constexpr const char* kSourceNames[2] = {"human", "robot"};

}  // namespace

const char* to_string(ChannelId c) { return kChannelNames[static_cast<int>(c)]; }
const char* to_string(TaskLabel t) { return kTaskNames[static_cast<int>(t)]; }
const char* to_string(Source s) { return kSourceNames[static_cast<int>(s)]; }

ChannelId parse_channel(const std::string& name) {
    for (int i = 0; i < kNumChannels; ++i) {
        if (name == kChannelNames[i]) return static_cast<ChannelId>(i);
    }
    throw ParseError("unknown channel name: '" + name + "'");
}

TaskLabel parse_task(const std::string& name) {
    for (int i = 0; i < kNumTasks; ++i) {
        if (name == kTaskNames[i]) return static_cast<TaskLabel>(i);
    }
    throw ParseError("unknown task name: '" + name + "'");
}

Source parse_source(const std::string& name) {
    for (int i = 0; i < 2; ++i) {
        if (name == kSourceNames[i]) return static_cast<Source>(i);
    }
    throw ParseError("unknown source name: '" + name + "'");
}

int feature_index(ChannelId channel, int stat) {
    if (stat < 0 || stat >= kNumStats) {
        throw ContractViolation("feature_index: stat ordinal " + std::to_string(stat) +
                                " outside [0, " + std::to_string(kNumStats) + ")");
    }
    return kNumStats * static_cast<int>(channel) + stat;
}

int feature_index(ChannelId channel, Stat stat) {
    return feature_index(channel, static_cast<int>(stat));
}

std::string RunKey::to_string() const {
    std::ostringstream os;
    os << subject_id << '/' << toolsense::to_string(source) << '/'
       << toolsense::to_string(task) << '/' << run_index;
    return os.str();
}

void validate_run(const SensorRun& run) {
    if (run.samples.empty()) {
        throw DataError("run " + run.key().to_string() + ": empty run");
    }
    if (!(run.rate_hz > 0.0)) {
        throw DataError("run " + run.key().to_string() + ": rate_hz must be positive");
    }
    const double dt = 1.0 / run.rate_hz;
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
        const SensorSample& s = run.samples[i];
        for (int c = 0; c < kNumChannels; ++c) {
            if (!std::isfinite(s.values[static_cast<std::size_t>(c)])) {
                throw DataError("run " + run.key().to_string() + ": non-finite value in channel '" +
                                to_string(static_cast<ChannelId>(c)) + "' at sample " +
                                std::to_string(i));
            }
        }
        if (i == 0) continue;
        const double gap = s.t - run.samples[i - 1].t;
        if (!(gap > 0.0)) {
            throw DataError("run " + run.key().to_string() +
                            ": non-monotonic timestamp at sample " + std::to_string(i));
        }
        if (std::abs(gap - dt) > 1e-6) {
            throw DataError("run " + run.key().to_string() + ": sample spacing " +
                            std::to_string(gap) + " s at sample " + std::to_string(i) +
                            " deviates from 1/rate_hz by more than 1e-6 s");
        }
    }
}

void validate_split(const SplitSpec& split) {
    auto overlaps = [](const std::set<RunKey>& a, const std::set<RunKey>& b) {
        for (const RunKey& k : a) {
            if (b.count(k) > 0) return true;
        }
        return false;
    };
    if (overlaps(split.train_runs, split.val_runs) ||
        overlaps(split.train_runs, split.test_runs) ||
        overlaps(split.val_runs, split.test_runs)) {
        throw DataError("split: train/val/test run sets are not pairwise disjoint");
    }
    if (split.mode == SplitMode::out_of_distribution) {
        for (const std::set<RunKey>* s : {&split.train_runs, &split.val_runs}) {
            for (const RunKey& k : *s) {
                if (k.subject_id == split.held_out_subject) {
                    throw DataError("split: held-out subject '" + split.held_out_subject +
                                    "' appears in train/val run " + k.to_string());
                }
            }
        }
    }
}

RunLookup::RunLookup(std::span<const SensorRun> runs) : runs_(runs) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
        index_.emplace(runs[i].key(), i);
    }
}

const SensorRun& RunLookup::at(const RunKey& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) {
        throw DataError("no loaded run matches key " + key.to_string());
    }
    return runs_[it->second];
}

}  // namespace toolsense

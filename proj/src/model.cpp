#include "toolsense/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "toolsense/rng.hpp"

namespace toolsense {

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

/// Forward pass keeping every layer's activations; returns pre-softmax logits
/// in `logits` and post-activation values in `activations` (a[0] = input).
void forward_trace(const MlpParams& p, std::span<const double> x,
                   std::vector<std::vector<double>>& activations, std::vector<double>& logits) {
    activations.resize(p.layer_count() + 1);
    activations[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        const int rows = p.layer_dims[l + 1];
        const int cols = p.layer_dims[l];
        const std::vector<double>& a = activations[l];
        std::vector<double>& out = activations[l + 1];
        out.assign(static_cast<std::size_t>(rows), 0.0);
        const double* w = p.weights[l].data();
        for (int r = 0; r < rows; ++r) {
            double z = p.biases[l][static_cast<std::size_t>(r)];
            const double* row = w + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
            for (int c = 0; c < cols; ++c) {
                z += row[c] * a[static_cast<std::size_t>(c)];
            }
            out[static_cast<std::size_t>(r)] = z;
        }
        if (l + 1 == p.layer_count()) {
            logits = out;
        } else {
            for (double& v : out) v = v > 0.0 ? v : 0.0;  // rectifier
        }
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

double log_sum_exp(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    return m + std::log(sum);
}

double loss_and_grad_indexed(const MlpParams& params, std::span<const Example> data,
                             std::span<const std::size_t> idx, Gradients& grad) {
    const auto batch_n = static_cast<double>(idx.size());
    const std::size_t depth = params.layer_count();
    double loss = 0.0;

    std::vector<std::vector<double>> activations;
    std::vector<double> logits;
    std::vector<double> delta, delta_prev;

    for (std::size_t sample : idx) {
        const Example& ex = data[sample];
        if (static_cast<int>(ex.x.size()) != params.input_dim()) {
            throw ContractViolation("loss_and_grad: example width " +
                                    std::to_string(ex.x.size()) + " does not match input dim " +
                                    std::to_string(params.input_dim()));
        }
        if (ex.label < 0 || ex.label >= params.output_dim()) {
            throw ContractViolation("loss_and_grad: label " + std::to_string(ex.label) +
                                    " outside [0, " + std::to_string(params.output_dim()) + ")");
        }
        forward_trace(params, ex.x, activations, logits);
        loss += (log_sum_exp(logits) - logits[static_cast<std::size_t>(ex.label)]) / batch_n;

        // d(loss)/d(logits) = (softmax - onehot) / batch_n
        delta = softmax(logits);
        delta[static_cast<std::size_t>(ex.label)] -= 1.0;
        for (double& v : delta) v /= batch_n;

        for (std::size_t l = depth; l-- > 0;) {
            const int rows = params.layer_dims[l + 1];
            const int cols = params.layer_dims[l];
            const std::vector<double>& a = activations[l];
            double* gw = grad.weights[l].data();
            for (int r = 0; r < rows; ++r) {
                const double d = delta[static_cast<std::size_t>(r)];
                grad.biases[l][static_cast<std::size_t>(r)] += d;
                double* row = gw + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
                for (int c = 0; c < cols; ++c) {
                    row[c] += d * a[static_cast<std::size_t>(c)];
                }
            }
            if (l == 0) break;
            delta_prev.assign(static_cast<std::size_t>(cols), 0.0);
            const double* w = params.weights[l].data();
            for (int r = 0; r < rows; ++r) {
                const double d = delta[static_cast<std::size_t>(r)];
                const double* row = w + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
                for (int c = 0; c < cols; ++c) {
                    delta_prev[static_cast<std::size_t>(c)] += row[c] * d;
                }
            }
            // Rectifier gate: activations[l] is post-ReLU, zero means blocked.
            for (int c = 0; c < cols; ++c) {
                if (a[static_cast<std::size_t>(c)] <= 0.0) delta_prev[static_cast<std::size_t>(c)] = 0.0;
            }
            delta.swap(delta_prev);
        }
    }
    return loss;
}

}  // namespace

MlpParams zero_params(const std::vector<int>& dims) {
    if (dims.size() < 2) {
        throw ContractViolation("model: need at least input and output dims");
    }
    MlpParams p;
    p.layer_dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        if (dims[l] <= 0 || dims[l + 1] <= 0) {
            throw ContractViolation("model: layer dims must be positive");
        }
        p.weights.emplace_back(static_cast<std::size_t>(dims[l]) * static_cast<std::size_t>(dims[l + 1]), 0.0);
        p.biases.emplace_back(static_cast<std::size_t>(dims[l + 1]), 0.0);
    }
    return p;
}

MlpParams init_params(const std::vector<int>& dims, std::uint64_t seed) {
    MlpParams p = zero_params(dims);
    Rng rng(seed);
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        const double limit = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
        for (double& w : p.weights[l]) {
            w = rng.uniform(-limit, limit);
        }
    }
    return p;
}

void validate_params(const MlpParams& p) {
    if (p.layer_dims.size() < 2 || p.weights.size() != p.layer_dims.size() - 1 ||
        p.biases.size() != p.weights.size()) {
        throw ContractViolation("model: inconsistent layer structure");
    }
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        const auto rows = static_cast<std::size_t>(p.layer_dims[l + 1]);
        const auto cols = static_cast<std::size_t>(p.layer_dims[l]);
        if (p.weights[l].size() != rows * cols || p.biases[l].size() != rows) {
            throw ContractViolation("model: tensor shape mismatch at layer " + std::to_string(l));
        }
        for (double v : p.weights[l]) {
            if (!std::isfinite(v)) throw ContractViolation("model: non-finite weight");
        }
        for (double v : p.biases[l]) {
            if (!std::isfinite(v)) throw ContractViolation("model: non-finite bias");
        }
    }
}

std::vector<double> forward(const MlpParams& params, std::span<const double> x) {
    if (static_cast<int>(x.size()) != params.input_dim()) {
        throw ContractViolation("forward: input width " + std::to_string(x.size()) +
                                " does not match input dim " +
                                std::to_string(params.input_dim()));
    }
    std::vector<std::vector<double>> activations;
    std::vector<double> logits;
    forward_trace(params, x, activations, logits);
    return softmax(logits);
}

int predict(const MlpParams& params, std::span<const double> x) {
    const std::vector<double> p = forward(params, x);
    int best = 0;
    for (int i = 1; i < static_cast<int>(p.size()); ++i) {
        if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
}

Gradients zero_gradients(const MlpParams& params) {
    Gradients g;
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        g.weights.emplace_back(params.weights[l].size(), 0.0);
        g.biases.emplace_back(params.biases[l].size(), 0.0);
    }
    return g;
}

double loss_and_grad(const MlpParams& params, std::span<const Example> batch, Gradients& grad) {
    if (batch.empty()) {
        throw ContractViolation("loss_and_grad: empty batch");
    }
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return loss_and_grad_indexed(params, batch, idx, grad);
}

double accuracy_on(const MlpParams& params, std::span<const Example> examples) {
    if (examples.empty()) {
        throw ContractViolation("accuracy_on: empty example set");
    }
    std::size_t hits = 0;
    for (const Example& ex : examples) {
        if (predict(params, ex.x) == ex.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainConfig& config, InitMode mode, const MlpParams* init) {
    if (train_set.empty() || val_set.empty()) {
        throw ContractViolation("train: train and validation sets must be non-empty");
    }
    if (config.batch_size <= 0 || config.epochs < 0) {
        throw ContractViolation("train: batch_size must be positive and epochs >= 0");
    }

    MlpParams params;
    double learning_rate = config.learning_rate;
    if (mode == InitMode::from_checkpoint) {
        if (init == nullptr) {
            throw ContractViolation("train: from_checkpoint requires initial parameters");
        }
        validate_params(*init);
        params = *init;
        learning_rate *= config.fine_tune_lr_scale;
    } else {
        std::vector<int> dims;
        dims.push_back(static_cast<int>(train_set[0].x.size()));
        dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
        dims.push_back(kNumTasks);
        params = init_params(dims, config.seed);
    }

    TrainResult result;
    result.params = params;
    result.best_val_accuracy = accuracy_on(params, val_set);
    result.best_epoch = 0;
    result.log.push_back({0, 0.0, result.best_val_accuracy});

    Gradients grad = zero_gradients(params);
    Gradients velocity = zero_gradients(params);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(Rng::mix(config.seed, 0x7261696e));  // shuffle stream

    double last_finite_loss = 0.0;
    int epochs_since_best = 0;
    const auto n = train_set.size();
    const auto batch = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n; begin += batch) {
            const std::size_t end = std::min(begin + batch, n);
            std::span<const std::size_t> idx(order.data() + begin, end - begin);
            for (auto& g : grad.weights) std::fill(g.begin(), g.end(), 0.0);
            for (auto& g : grad.biases) std::fill(g.begin(), g.end(), 0.0);
            const double loss = loss_and_grad_indexed(params, train_set, idx, grad);
            if (!std::isfinite(loss)) {
                throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch),
                                    epoch, last_finite_loss);
            }
            last_finite_loss = loss;
            epoch_loss += loss * static_cast<double>(idx.size());

            for (std::size_t l = 0; l < params.layer_count(); ++l) {
                double* v = velocity.weights[l].data();
                double* w = params.weights[l].data();
                const double* g = grad.weights[l].data();
                for (std::size_t i = 0; i < params.weights[l].size(); ++i) {
                    v[i] = config.momentum * v[i] - learning_rate * g[i];
                    w[i] += v[i];
                }
                double* vb = velocity.biases[l].data();
                double* b = params.biases[l].data();
                const double* gb = grad.biases[l].data();
                for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
                    vb[i] = config.momentum * vb[i] - learning_rate * gb[i];
                    b[i] += vb[i];
                }
            }
        }

        const double val_accuracy = accuracy_on(params, val_set);
        result.log.push_back({epoch, epoch_loss / static_cast<double>(n), val_accuracy});
        if (val_accuracy > result.best_val_accuracy) {
            result.best_val_accuracy = val_accuracy;
            result.best_epoch = epoch;
            result.params = params;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (config.patience > 0 && epochs_since_best >= config.patience) break;
        }
    }
    return result;
}

void save_checkpoint(const MlpParams& params, const Provenance& provenance,
                     const std::filesystem::path& path) {
    validate_params(params);
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");

    out << "MLPCKPT v" << kCheckpointVersion << '\n';
    std::string line = "dims";
    for (int d : params.layer_dims) {
        line += ' ';
        line += std::to_string(d);
    }
    out << line << '\n';

    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        line = "W" + std::to_string(l);
        for (double v : params.weights[l]) {
            line += ' ';
            append_double(line, v);
        }
        out << line << '\n';
        line = "b" + std::to_string(l);
        for (double v : params.biases[l]) {
            line += ' ';
            append_double(line, v);
        }
        out << line << '\n';
    }

    nlohmann::json j{{"data_fingerprint", provenance.data_fingerprint},
                     {"seed", provenance.seed},
                     {"epochs", provenance.epochs}};
    out << "# provenance " << j.dump() << '\n';
}

namespace {

std::vector<double> parse_tensor_line(const std::string& line, const std::string& tag,
                                      std::size_t expected, const std::string& file) {
    std::istringstream is(line);
    std::string head;
    is >> head;
    if (head != tag) {
        throw CheckpointError("checkpoint '" + file + "': expected tensor '" + tag +
                              "', found '" + head + "'");
    }
    std::vector<double> values;
    values.reserve(expected);
    double v;
    while (is >> v) values.push_back(v);
    if (values.size() != expected) {
        throw CheckpointError("checkpoint '" + file + "': tensor '" + tag + "' has " +
                              std::to_string(values.size()) + " values, expected " +
                              std::to_string(expected));
    }
    return values;
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    const std::string file = path.string();

    std::string line;
    if (!std::getline(in, line)) {
        throw CheckpointError("checkpoint '" + file + "': missing header");
    }
    if (line.rfind("MLPCKPT v", 0) != 0) {
        throw CheckpointError("checkpoint '" + file + "': bad magic in header");
    }
    int version = 0;
    try {
        version = std::stoi(line.substr(9));
    } catch (const std::exception&) {
        throw CheckpointError("checkpoint '" + file + "': unparsable version in header");
    }
    if (version != kCheckpointVersion) {
        throw CheckpointError("checkpoint '" + file + "': format_version " +
                              std::to_string(version) + " not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }

    if (!std::getline(in, line)) {
        throw CheckpointError("checkpoint '" + file + "': missing dims line");
    }
    std::istringstream dims_in(line);
    std::string tag;
    dims_in >> tag;
    if (tag != "dims") {
        throw CheckpointError("checkpoint '" + file + "': expected 'dims' line");
    }
    std::vector<int> dims;
    int d;
    while (dims_in >> d) dims.push_back(d);
    if (dims.size() < 2) {
        throw CheckpointError("checkpoint '" + file + "': dims needs at least two entries");
    }
    for (int dim : dims) {
        if (dim <= 0) throw CheckpointError("checkpoint '" + file + "': non-positive dim");
    }

    Checkpoint ckpt;
    ckpt.format_version = version;
    ckpt.params.layer_dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto rows = static_cast<std::size_t>(dims[l + 1]);
        const auto cols = static_cast<std::size_t>(dims[l]);
        if (!std::getline(in, line)) {
            throw CheckpointError("checkpoint '" + file + "': missing tensor W" + std::to_string(l));
        }
        ckpt.params.weights.push_back(
            parse_tensor_line(line, "W" + std::to_string(l), rows * cols, file));
        if (!std::getline(in, line)) {
            throw CheckpointError("checkpoint '" + file + "': missing tensor b" + std::to_string(l));
        }
        ckpt.params.biases.push_back(
            parse_tensor_line(line, "b" + std::to_string(l), rows, file));
    }

    while (std::getline(in, line)) {
        if (line.rfind("# provenance ", 0) == 0) {
            try {
                nlohmann::json j = nlohmann::json::parse(line.substr(13));
                ckpt.provenance.data_fingerprint = j.value("data_fingerprint", std::string{});
                ckpt.provenance.seed = j.value("seed", std::uint64_t{0});
                ckpt.provenance.epochs = j.value("epochs", 0);
            } catch (const nlohmann::json::exception& e) {
                throw CheckpointError("checkpoint '" + file + "': bad provenance block: " +
                                      e.what());
            }
        } else if (!line.empty() && line[0] != '#') {
            throw CheckpointError("checkpoint '" + file + "': unexpected trailing line");
        }
    }

    validate_params(ckpt.params);
    return ckpt;
}

std::string data_fingerprint(std::span<const Example> examples) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const Example& ex : examples) {
        mix_bytes(&ex.label, sizeof(ex.label));
        mix_bytes(ex.x.data(), ex.x.size() * sizeof(double));
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace toolsense

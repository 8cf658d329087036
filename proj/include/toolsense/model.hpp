#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toolsense/types.hpp"

namespace toolsense {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Feed-forward classifier: rectifier hidden layers, softmax head.
/// weights[l] is row-major with shape dims[l+1] x dims[l].
struct MlpParams {
    std::vector<int> layer_dims;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    std::size_t layer_count() const { return weights.size(); }
};

/// Uniform init in +-sqrt(6 / (fan_in + fan_out)), biases zero.
MlpParams init_params(const std::vector<int>& dims, std::uint64_t seed);
MlpParams zero_params(const std::vector<int>& dims);
void validate_params(const MlpParams& p);

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

/// One labeled window: feature values plus class ordinal.
struct Example {
    std::vector<double> x;
    int label = 0;
};

/// Class probabilities; non-negative, summing to 1 within 1e-9.
std::vector<double> forward(const MlpParams& params, std::span<const double> x);

int predict(const MlpParams& params, std::span<const double> x);  // argmax, ties -> lowest ordinal

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

Gradients zero_gradients(const MlpParams& params);

/// Mean cross-entropy over the batch; accumulates d(loss)/d(params) into
/// `grad` (which must be zeroed by the caller).
double loss_and_grad(const MlpParams& params, std::span<const Example> batch, Gradients& grad);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    int epochs = 150;
    int batch_size = 32;
    double learning_rate = 0.01;
    double fine_tune_lr_scale = 0.1;  // applied when initialized from a checkpoint
    double momentum = 0.9;
    int patience = 20;  // early stop on validation accuracy
    std::uint64_t seed = 0;
    std::vector<int> hidden_dims = {64, 32};
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    MlpParams params;  // snapshot of the best-validation epoch
    std::vector<EpochStats> log;
    double best_val_accuracy = 0.0;
    int best_epoch = 0;  // 0 = initial parameters before any update
};

enum class InitMode {
    random_init,      // zero-shot: fresh seeded parameters
    from_checkpoint,  // fine-tune: all layers at learning_rate * fine_tune_lr_scale
};

/// Deterministic mini-batch SGD with momentum. The epoch shuffle order is a
/// pure function of config.seed. Returns the parameters of the epoch with the
/// best validation accuracy (the initial parameters count as epoch 0).
/// Throws TrainingError if the loss turns non-finite.
TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainConfig& config, InitMode mode, const MlpParams* init = nullptr);

double accuracy_on(const MlpParams& params, std::span<const Example> examples);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

struct Provenance {
    std::string data_fingerprint;
    std::uint64_t seed = 0;
    int epochs = 0;
};

struct Checkpoint {
    int format_version = kCheckpointVersion;
    MlpParams params;
    Provenance provenance;
};

/// Versioned UTF-8 text: `MLPCKPT v1` header, dims line, one row-major tensor
/// per line at 17 significant digits, provenance as a trailing JSON comment.
void save_checkpoint(const MlpParams& params, const Provenance& provenance,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the examples' bits; recorded in checkpoint provenance.
std::string data_fingerprint(std::span<const Example> examples);

}  // namespace toolsense

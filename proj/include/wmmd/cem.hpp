#pragma once

// Classification-EM training. Each epoch:
//   E-step  class posteriors of every target sample under the current model;
//   C-step  argmax pseudo-labels, target prior estimates and alpha_c = w^t_c / w^s_c;
//   M-step  one shuffled pass of mini-batch SGD with momentum on
//           source CE + gamma * target CE + lambda * sum_taps WMMD^2_linear,
//           with pseudo-labels and alphas frozen.
// Alphas stay at 1 during the first epoch.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "wmmd/data.hpp"
#include "wmmd/kernels.hpp"
#include "wmmd/mmd.hpp"
#include "wmmd/model.hpp"

namespace wmmd {

struct TrainConfig {
    double lambda = 0.4;
    double gamma = 0.1;
    std::size_t batch_size = 64;  // rows per domain in each mini-batch
    std::size_t epochs = 30;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    double alpha_smoothing = 1e-3;
    // false pins every alpha at 1 (unweighted MMD).
    bool estimate_alpha = true;
    // Rescale the kernel bandwidths by the median feature distance of each tap
    // layer at the start of every epoch.
    bool refresh_bandwidth = true;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    LossTerms terms;  // means over the epoch's mini-batches
    Vector alphas;    // alphas in force during the epoch
    Vector target_priors;
    std::vector<double> bandwidth_scale;  // per tap layer
    std::optional<double> target_accuracy;
};

struct TrainState {
    ModelParams params;
    Gradients velocity;
    AuxWeights weights;
    Labels pseudo_labels;
    std::size_t epoch = 0;
    std::vector<double> loss_history;
    std::vector<EpochRecord> records;
    std::mt19937_64 rng;
};

// w^s_c = M_c / M.
Vector estimate_source_priors(std::span<const std::size_t> labels, std::size_t class_count);

// N x C matrix of softmax outputs.
Matrix e_step(const ModelConfig& config, const ModelParams& params, const Matrix& target);

struct CStepResult {
    Labels pseudo_labels;
    AuxWeights weights;
};

// Pseudo-labels by argmax (ties go to the lowest index), target priors from
// label counts and alpha_c = (w^t_c + eps) / (w^s_c + eps).
CStepResult c_step(const Matrix& posteriors, const Vector& source_priors, double smoothing);

// One epoch of mini-batch SGD with momentum; updates state.params and
// state.velocity and returns the mean loss terms.
LossTerms m_step(TrainState& state, const ModelConfig& model_config, const Dataset& source, const Matrix& target,
                 const TrainConfig& config, std::span<const KernelSpec> tap_kernels);

struct TrainHooks {
    // Labeled target used only to report accuracy per epoch.
    const Dataset* evaluation = nullptr;
    std::function<void(const EpochRecord&)> on_epoch;
};

// With refresh_bandwidth, the bandwidths of `kernel` are multipliers of each
// tap layer's median feature distance; otherwise they are used as given.
TrainState train(const Dataset& source, const Matrix& target, const ModelConfig& model_config,
                 const TrainConfig& config, const KernelSpec& kernel, const TrainHooks& hooks = {});

struct Evaluation {
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

Evaluation evaluate(const ModelConfig& config, const ModelParams& params, const Dataset& data);

// Index of the largest entry; lowest index wins ties.
std::size_t argmax(std::span<const double> values);

}  // namespace wmmd

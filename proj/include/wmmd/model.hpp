#pragma once

// Feedforward softmax classifier. Dense layer l maps the output of layer l-1
// (or the input batch for l = 0) through an affine map; hidden layers apply the
// configured activation, the last layer emits logits. "Tap" layers are the
// layers whose outputs feed the discrepancy regularizer.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "wmmd/kernels.hpp"
#include "wmmd/mmd.hpp"
#include "wmmd/numerics.hpp"

namespace wmmd {

struct ModelConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims{64, 32};
    std::size_t class_count = 2;
    // Contiguous dense-layer indices; empty means {last hidden, logits}.
    std::vector<std::size_t> tap_layers;
    Activation activation = Activation::relu;

    std::size_t layer_count() const noexcept { return hidden_dims.size() + 1; }
    std::size_t layer_width(std::size_t layer) const;

    // Fills in default taps and throws ParameterError on an inconsistent config.
    ModelConfig& normalize();

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ModelParams {
    std::vector<Matrix> weights;  // layer l: in x out
    std::vector<Matrix> biases;   // layer l: 1 x out

    // Uniform in [-s, s], s = sqrt(6 / (fan_in + fan_out)); zero biases.
    static ModelParams glorot(const ModelConfig& config, std::uint64_t seed);
    static ModelParams zeros(const ModelConfig& config);

    Gradients zero_gradients() const { return Gradients::zeros_like(weights, biases); }
    // Throws ShapeError unless shapes match `config`.
    void check_shapes(const ModelConfig& config) const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct ForwardTrace {
    Matrix input;
    std::vector<Matrix> pre;   // affine outputs per layer
    std::vector<Matrix> post;  // activations per layer; post.back() is the logits
    Matrix probs;              // softmax of the logits, one row per sample

    const Matrix& features(std::size_t layer) const { return post.at(layer); }
};

ForwardTrace forward(const ModelConfig& config, const ModelParams& params, const Matrix& batch);

// Settings of the training objective that stay fixed during an M-step.
struct Objective {
    double lambda = 0.0;
    double gamma = 0.0;
    AuxWeights weights;
    // One spec per tap layer, or a single spec shared by all taps.
    std::vector<KernelSpec> kernels;

    const KernelSpec& kernel_for_tap(std::size_t tap_index) const;
};

struct LossTerms {
    double source_ce = 0.0;  // mean over the source batch
    double target_ce = 0.0;  // mean over the target batch against pseudo-labels
    double wmmd = 0.0;       // sum of the per-tap linear-time estimates
    double total = 0.0;      // source_ce + gamma target_ce + lambda wmmd
};

struct DomainBatch {
    const Matrix& features;
    std::span<const std::size_t> labels;  // true labels (source) or pseudo-labels (target)
};

LossTerms loss(const ModelConfig& config, const ModelParams& params, const DomainBatch& src,
               const DomainBatch& tgt, const Objective& objective);

LossTerms loss_from_traces(const ModelConfig& config, const ForwardTrace& src_trace, const ForwardTrace& tgt_trace,
                           std::span<const std::size_t> src_labels, std::span<const std::size_t> tgt_labels,
                           const Objective& objective);

Gradients backward(const ModelConfig& config, const ModelParams& params, const ForwardTrace& src_trace,
                   const ForwardTrace& tgt_trace, std::span<const std::size_t> src_labels,
                   std::span<const std::size_t> tgt_labels, const Objective& objective);

struct LossAndGradients {
    LossTerms terms;
    Gradients grads;
};

LossAndGradients loss_and_gradients(const ModelConfig& config, const ModelParams& params, const DomainBatch& src,
                                    const DomainBatch& tgt, const Objective& objective);

// Text checkpoint: header line, config, then each matrix with its shape and
// hex-float values, so a save/load cycle is bit-exact.
void save_checkpoint(std::ostream& out, const ModelConfig& config, const ModelParams& params);
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const ModelParams& params);

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
};

Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wmmd

#include "wmmd/cem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "wmmd/error.hpp"

namespace wmmd {

void TrainConfig::validate() const {
    if (!(lambda >= 0.0)) throw ParameterError(fmt::format("lambda {} is negative", lambda));
    if (!(gamma >= 0.0)) throw ParameterError(fmt::format("gamma {} is negative", gamma));
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw ParameterError(fmt::format("batch size {} must be even and at least 2", batch_size));
    }
    if (!(learning_rate >= 0.0)) throw ParameterError("learning rate is negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
    if (!(alpha_smoothing >= 0.0)) throw ParameterError("alpha smoothing is negative");
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw ShapeError("argmax of empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

Vector estimate_source_priors(std::span<const std::size_t> labels, std::size_t class_count) {
    return class_frequencies(labels, class_count);
}

Matrix e_step(const ModelConfig& config, const ModelParams& params, const Matrix& target) {
    return forward(config, params, target).probs;
}

CStepResult c_step(const Matrix& posteriors, const Vector& source_priors, double smoothing) {
    if (posteriors.cols() != source_priors.size()) {
        throw ShapeError(fmt::format("{} posterior columns vs {} source priors", posteriors.cols(),
                                     source_priors.size()));
    }
    if (posteriors.rows() == 0) throw DataError("no target samples to label");
    if (std::all_of(source_priors.begin(), source_priors.end(), [](double p) { return p <= 0.0; })) {
        throw DegenerateWeightsError("every source prior is zero");
    }
    const std::size_t classes = posteriors.cols();
    CStepResult out;
    out.pseudo_labels.resize(posteriors.rows());
    std::vector<std::size_t> counts(classes, 0);
    for (std::size_t j = 0; j < posteriors.rows(); ++j) {
        out.pseudo_labels[j] = argmax(posteriors.row(j));
        ++counts[out.pseudo_labels[j]];
    }
    Vector target_priors(classes);
    Vector alphas(classes);
    const auto n = static_cast<double>(posteriors.rows());
    for (std::size_t c = 0; c < classes; ++c) {
        target_priors[c] = static_cast<double>(counts[c]) / n;
        const double denom = source_priors[c] + smoothing;
        alphas[c] = denom > 0.0 ? (target_priors[c] + smoothing) / denom : 0.0;
    }
    out.weights = AuxWeights{source_priors, std::move(target_priors), std::move(alphas)};
    return out;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

std::vector<std::size_t> cyclic_slice(const std::vector<std::size_t>& perm, std::size_t start, std::size_t count) {
    std::vector<std::size_t> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = perm[(start + k) % perm.size()];
    return out;
}

void sgd_update(ModelParams& params, Gradients& velocity, const Gradients& grads, double lr, double momentum) {
    auto step = [&](Matrix& p, Matrix& v, const Matrix& g) {
        auto pv = p.values();
        auto vv = v.values();
        auto gv = g.values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            vv[i] = momentum * vv[i] - lr * gv[i];
            pv[i] += vv[i];
        }
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        step(params.weights[l], velocity.weights[l], grads.weights[l]);
        step(params.biases[l], velocity.biases[l], grads.biases[l]);
    }
}

}  // namespace

LossTerms m_step(TrainState& state, const ModelConfig& model_config, const Dataset& source, const Matrix& target,
                 const TrainConfig& config, std::span<const KernelSpec> tap_kernels) {
    const std::size_t m = source.size();
    const std::size_t n = target.rows();
    if (m < 2 || n < 2) throw DataError(fmt::format("need 2 samples per domain, have {} and {}", m, n));
    if (!source.has_labels()) throw DataError("source samples are unlabeled");
    if (state.pseudo_labels.size() != n) throw ShapeError("pseudo-labels do not cover the target set");
    if (state.velocity.weights.empty()) state.velocity = state.params.zero_gradients();

    Objective objective;
    objective.lambda = config.lambda;
    objective.gamma = config.gamma;
    objective.weights = state.weights;
    objective.kernels.assign(tap_kernels.begin(), tap_kernels.end());

    const std::vector<std::size_t> src_perm = shuffled_indices(m, state.rng);
    const std::vector<std::size_t> tgt_perm = shuffled_indices(n, state.rng);
    const std::size_t batch = config.batch_size;
    const std::size_t src_batch = std::min(batch, m);
    const std::size_t tgt_batch = std::min(batch, n);
    const std::size_t steps = (std::max(m, n) + batch - 1) / batch;

    LossTerms mean;
    for (std::size_t s = 0; s < steps; ++s) {
        const auto si = cyclic_slice(src_perm, s * batch, src_batch);
        const auto ti = cyclic_slice(tgt_perm, s * batch, tgt_batch);
        const Matrix xs = source.features.gather_rows(si);
        const Matrix xt = target.gather_rows(ti);
        Labels ys(si.size());
        Labels yt(ti.size());
        for (std::size_t k = 0; k < si.size(); ++k) ys[k] = source.labels[si[k]];
        for (std::size_t k = 0; k < ti.size(); ++k) yt[k] = state.pseudo_labels[ti[k]];

        const LossAndGradients lg =
            loss_and_gradients(model_config, state.params, {xs, ys}, {xt, yt}, objective);
        sgd_update(state.params, state.velocity, lg.grads, config.learning_rate, config.momentum);

        mean.source_ce += lg.terms.source_ce;
        mean.target_ce += lg.terms.target_ce;
        mean.wmmd += lg.terms.wmmd;
        mean.total += lg.terms.total;
    }
    const auto k = static_cast<double>(steps);
    mean.source_ce /= k;
    mean.target_ce /= k;
    mean.wmmd /= k;
    mean.total /= k;
    if (!std::isfinite(mean.total)) throw NumericError(fmt::format("epoch {} loss is not finite", state.epoch));
    return mean;
}

namespace {

// Rows per domain fed to the per-epoch bandwidth refresh.
constexpr std::size_t kBandwidthRows = 128;

std::vector<std::size_t> bandwidth_rows(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx = shuffled_indices(n, rng);
    idx.resize(std::min(n, kBandwidthRows));
    return idx;
}

Matrix stack_rows(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() + b.rows(), a.cols());
    std::copy(a.values().begin(), a.values().end(), out.values().begin());
    std::copy(b.values().begin(), b.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

}  // namespace

TrainState train(const Dataset& source, const Matrix& target, const ModelConfig& model_config,
                 const TrainConfig& config, const KernelSpec& kernel, const TrainHooks& hooks) {
    config.validate();
    ModelConfig mc = model_config;
    mc.normalize();
    if (!source.has_labels()) throw DataError("source samples are unlabeled");
    if (source.dim() != mc.input_dim || target.cols() != mc.input_dim) {
        throw ShapeError("training data dimension does not match the model input");
    }

    TrainState state;
    state.params = ModelParams::glorot(mc, mix_seed(config.seed, 0));
    state.velocity = state.params.zero_gradients();
    state.rng.seed(mix_seed(config.seed, 1));
    const Vector source_priors = estimate_source_priors(source.labels, mc.class_count);
    const auto src_probe = bandwidth_rows(source.size(), mix_seed(config.seed, 2));
    const auto tgt_probe = bandwidth_rows(target.rows(), mix_seed(config.seed, 3));

    auto run_estep = [&](const ForwardTrace& tgt_trace, bool update_alpha) {
        CStepResult c = c_step(tgt_trace.probs, source_priors, config.alpha_smoothing);
        state.pseudo_labels = std::move(c.pseudo_labels);
        if (!update_alpha) std::fill(c.weights.alphas.begin(), c.weights.alphas.end(), 1.0);
        state.weights = std::move(c.weights);
    };

    for (std::size_t e = 0; e < config.epochs; ++e) {
        state.epoch = e;
        const ForwardTrace src_trace = forward(mc, state.params, source.features);
        const ForwardTrace tgt_trace = forward(mc, state.params, target);
        run_estep(tgt_trace, config.estimate_alpha && e > 0);

        EpochRecord rec;
        rec.epoch = e;
        std::vector<KernelSpec> kernels;
        for (std::size_t layer : mc.tap_layers) {
            double scale = 1.0;
            if (config.refresh_bandwidth) {
                scale = median_heuristic(stack_rows(src_trace.features(layer).gather_rows(src_probe),
                                                    tgt_trace.features(layer).gather_rows(tgt_probe)));
            }
            rec.bandwidth_scale.push_back(scale);
            kernels.push_back(kernel.scaled(scale));
        }

        rec.terms = m_step(state, mc, source, target, config, kernels);
        rec.alphas = state.weights.alphas;
        rec.target_priors = state.weights.target_priors;
        if (hooks.evaluation != nullptr) rec.target_accuracy = evaluate(mc, state.params, *hooks.evaluation).accuracy;
        state.loss_history.push_back(rec.terms.total);
        if (hooks.on_epoch) hooks.on_epoch(rec);
        state.records.push_back(std::move(rec));
    }
    state.epoch = config.epochs;
    // Final E/C pass so the reported pseudo-labels and alphas reflect the trained model.
    run_estep(forward(mc, state.params, target), config.estimate_alpha && config.epochs > 0);
    return state;
}

Evaluation evaluate(const ModelConfig& config, const ModelParams& params, const Dataset& data) {
    if (data.size() == 0) throw DataError("cannot evaluate on an empty dataset");
    if (!data.has_labels()) throw DataError("evaluation needs labels");
    const Matrix probs = forward(config, params, data.features).probs;
    const std::size_t classes = config.class_count;
    Evaluation ev;
    ev.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t pred = argmax(probs.row(i));
        if (data.labels[i] >= classes) throw IndexError(fmt::format("label {} out of range", data.labels[i]));
        ++ev.confusion[data.labels[i]][pred];
        if (pred == data.labels[i]) ++correct;
    }
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return ev;
}

}  // namespace wmmd

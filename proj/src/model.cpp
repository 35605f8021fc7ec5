#include "wmmd/model.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <fmt/core.h>

#include "wmmd/error.hpp"

namespace wmmd {

std::size_t ModelConfig::layer_width(std::size_t layer) const {
    if (layer >= layer_count()) throw IndexError(fmt::format("layer {} out of range", layer));
    return layer + 1 == layer_count() ? class_count : hidden_dims[layer];
}

ModelConfig& ModelConfig::normalize() {
    if (input_dim == 0) throw ParameterError("input dimension must be positive");
    if (class_count < 2) throw ParameterError("need at least two classes");
    for (std::size_t h : hidden_dims) {
        if (h == 0) throw ParameterError("hidden layer width must be positive");
    }
    if (tap_layers.empty()) {
        if (!hidden_dims.empty()) tap_layers.push_back(hidden_dims.size() - 1);
        tap_layers.push_back(hidden_dims.size());
    }
    for (std::size_t i = 0; i < tap_layers.size(); ++i) {
        if (tap_layers[i] >= layer_count()) {
            throw ParameterError(fmt::format("tap layer {} outside {} layers", tap_layers[i], layer_count()));
        }
        if (i > 0 && tap_layers[i] != tap_layers[i - 1] + 1) throw ParameterError("tap layers must be contiguous");
    }
    return *this;
}

ModelParams ModelParams::glorot(const ModelConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ModelParams p;
    std::size_t fan_in = config.input_dim;
    for (std::size_t l = 0; l < config.layer_count(); ++l) {
        const std::size_t fan_out = config.layer_width(l);
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-s, s);
        Matrix w(fan_in, fan_out);
        for (double& v : w.values()) v = dist(rng);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(1, fan_out);
        fan_in = fan_out;
    }
    return p;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
    ModelParams p;
    std::size_t fan_in = config.input_dim;
    for (std::size_t l = 0; l < config.layer_count(); ++l) {
        const std::size_t fan_out = config.layer_width(l);
        p.weights.emplace_back(fan_in, fan_out);
        p.biases.emplace_back(1, fan_out);
        fan_in = fan_out;
    }
    return p;
}

void ModelParams::check_shapes(const ModelConfig& config) const {
    if (weights.size() != config.layer_count() || biases.size() != config.layer_count()) {
        throw ShapeError(fmt::format("parameters have {} layers, config has {}", weights.size(), config.layer_count()));
    }
    std::size_t fan_in = config.input_dim;
    for (std::size_t l = 0; l < config.layer_count(); ++l) {
        const std::size_t fan_out = config.layer_width(l);
        if (weights[l].rows() != fan_in || weights[l].cols() != fan_out || biases[l].rows() != 1 ||
            biases[l].cols() != fan_out) {
            throw ShapeError(fmt::format("layer {} parameters do not match {}x{}", l, fan_in, fan_out));
        }
        fan_in = fan_out;
    }
}

ForwardTrace forward(const ModelConfig& config, const ModelParams& params, const Matrix& batch) {
    if (batch.cols() != config.input_dim) {
        throw ShapeError(fmt::format("batch has {} columns, model expects {}", batch.cols(), config.input_dim));
    }
    ForwardTrace trace;
    trace.input = batch;
    const Matrix* x = &trace.input;
    for (std::size_t l = 0; l < config.layer_count(); ++l) {
        trace.pre.push_back(dense_forward(*x, params.weights[l], params.biases[l]));
        const bool is_logits = l + 1 == config.layer_count();
        trace.post.push_back(is_logits ? trace.pre.back() : activate(trace.pre.back(), config.activation));
        x = &trace.post.back();
    }
    trace.probs = softmax_rows(trace.post.back());
    return trace;
}

const KernelSpec& Objective::kernel_for_tap(std::size_t tap_index) const {
    if (kernels.empty()) throw ParameterError("objective has no kernel spec");
    return kernels.size() == 1 ? kernels.front() : kernels.at(tap_index);
}

namespace {

double mean_cross_entropy(const Matrix& probs, std::span<const std::size_t> labels) {
    if (labels.size() != probs.rows()) {
        throw ShapeError(fmt::format("{} labels for {} samples", labels.size(), probs.rows()));
    }
    if (probs.rows() == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) acc += cross_entropy(probs.row(i), labels[i]);
    return acc / static_cast<double>(probs.rows());
}

bool uses_target_loss(const Objective& objective) { return objective.gamma != 0.0; }
bool uses_regularizer(const Objective& objective) { return objective.lambda != 0.0; }

}  // namespace

LossTerms loss_from_traces(const ModelConfig& config, const ForwardTrace& src_trace, const ForwardTrace& tgt_trace,
                           std::span<const std::size_t> src_labels, std::span<const std::size_t> tgt_labels,
                           const Objective& objective) {
    LossTerms t;
    t.source_ce = mean_cross_entropy(src_trace.probs, src_labels);
    if (uses_target_loss(objective)) t.target_ce = mean_cross_entropy(tgt_trace.probs, tgt_labels);
    if (uses_regularizer(objective)) {
        for (std::size_t k = 0; k < config.tap_layers.size(); ++k) {
            const std::size_t layer = config.tap_layers[k];
            t.wmmd += wmmd2_linear(src_trace.features(layer), src_labels, tgt_trace.features(layer),
                                   objective.weights, objective.kernel_for_tap(k));
        }
    }
    t.total = t.source_ce + objective.gamma * t.target_ce + objective.lambda * t.wmmd;
    return t;
}

LossTerms loss(const ModelConfig& config, const ModelParams& params, const DomainBatch& src, const DomainBatch& tgt,
               const Objective& objective) {
    const ForwardTrace s = forward(config, params, src.features);
    const ForwardTrace t = forward(config, params, tgt.features);
    return loss_from_traces(config, s, t, src.labels, tgt.labels, objective);
}

namespace {

Matrix logits_gradient(const Matrix& probs, std::span<const std::size_t> labels, double scale) {
    if (labels.size() != probs.rows()) {
        throw ShapeError(fmt::format("{} labels for {} samples", labels.size(), probs.rows()));
    }
    Matrix g(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const Vector gi = softmax_cross_entropy_grad(probs.row(i), labels[i]);
        for (std::size_t c = 0; c < gi.size(); ++c) g(i, c) = scale * gi[c];
    }
    return g;
}

// Backpropagates per-layer output gradients of one domain into `grads`.
void backprop_domain(const ModelConfig& config, const ModelParams& params, const ForwardTrace& trace,
                     std::vector<Matrix> grad_post, Gradients& grads) {
    for (std::size_t l = config.layer_count(); l-- > 0;) {
        const bool is_logits = l + 1 == config.layer_count();
        const Matrix grad_pre =
            is_logits ? grad_post[l] : activation_backward(trace.pre[l], grad_post[l], config.activation);
        const Matrix& layer_input = l == 0 ? trace.input : trace.post[l - 1];
        DenseGrads g = dense_backward(layer_input, params.weights[l], grad_pre);
        grads.weights[l] += g.weight;
        grads.biases[l] += g.bias;
        if (l > 0) grad_post[l - 1] += g.input;
    }
}

std::vector<Matrix> zero_layer_grads(const ForwardTrace& trace) {
    std::vector<Matrix> out;
    for (const auto& p : trace.post) out.emplace_back(p.rows(), p.cols());
    return out;
}

}  // namespace

Gradients backward(const ModelConfig& config, const ModelParams& params, const ForwardTrace& src_trace,
                   const ForwardTrace& tgt_trace, std::span<const std::size_t> src_labels,
                   std::span<const std::size_t> tgt_labels, const Objective& objective) {
    std::vector<Matrix> src_grad = zero_layer_grads(src_trace);
    std::vector<Matrix> tgt_grad = zero_layer_grads(tgt_trace);

    if (src_trace.probs.rows() > 0) {
        src_grad.back() += logits_gradient(src_trace.probs, src_labels,
                                           1.0 / static_cast<double>(src_trace.probs.rows()));
    }
    if (uses_target_loss(objective) && tgt_trace.probs.rows() > 0) {
        tgt_grad.back() += logits_gradient(tgt_trace.probs, tgt_labels,
                                           objective.gamma / static_cast<double>(tgt_trace.probs.rows()));
    }
    if (uses_regularizer(objective)) {
        for (std::size_t k = 0; k < config.tap_layers.size(); ++k) {
            const std::size_t layer = config.tap_layers[k];
            LinearEstimate est = wmmd2_linear_with_grad(src_trace.features(layer), src_labels,
                                                        tgt_trace.features(layer), objective.weights,
                                                        objective.kernel_for_tap(k));
            src_grad[layer] += est.grad_source * objective.lambda;
            tgt_grad[layer] += est.grad_target * objective.lambda;
        }
    }

    Gradients grads = params.zero_gradients();
    backprop_domain(config, params, src_trace, std::move(src_grad), grads);
    backprop_domain(config, params, tgt_trace, std::move(tgt_grad), grads);
    return grads;
}

LossAndGradients loss_and_gradients(const ModelConfig& config, const ModelParams& params, const DomainBatch& src,
                                    const DomainBatch& tgt, const Objective& objective) {
    const ForwardTrace s = forward(config, params, src.features);
    const ForwardTrace t = forward(config, params, tgt.features);
    LossAndGradients out;
    out.terms = loss_from_traces(config, s, t, src.labels, tgt.labels, objective);
    out.grads = backward(config, params, s, t, src.labels, tgt.labels, objective);
    return out;
}

// ---- checkpoints ----

namespace {

constexpr const char* kCheckpointMagic = "wmmd-checkpoint";
constexpr int kCheckpointVersion = 1;

void write_matrix(std::ostream& out, const char* name, const Matrix& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << fmt::format("{:a}", row[c]);
        out << '\n';
    }
}

std::string expect_line(std::istream& in, std::size_t& line_no) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("unexpected end of checkpoint", line_no + 1);
    ++line_no;
    return line;
}

template <typename T>
std::vector<T> read_list(std::istringstream& ss) {
    std::vector<T> out;
    T v;
    while (ss >> v) out.push_back(v);
    return out;
}

Matrix read_matrix(std::istream& in, const char* name, std::size_t& line_no) {
    std::istringstream header(expect_line(in, line_no));
    std::string tag;
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(header >> tag >> rows >> cols) || tag != name) {
        throw ParseError(fmt::format("expected '{} <rows> <cols>'", name), line_no);
    }
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        std::istringstream row(expect_line(in, line_no));
        std::string token;
        for (std::size_t c = 0; c < cols; ++c) {
            if (!(row >> token)) throw ParseError("short matrix row", line_no);
            char* end = nullptr;
            m(r, c) = std::strtod(token.c_str(), &end);
            if (end == token.c_str() || *end != '\0') throw ParseError("bad number '" + token + "'", line_no);
        }
        if (row >> token) throw ParseError("long matrix row", line_no);
    }
    return m;
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelConfig& config, const ModelParams& params) {
    params.check_shapes(config);
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    out << "input_dim " << config.input_dim << '\n';
    out << "hidden";
    for (std::size_t h : config.hidden_dims) out << ' ' << h;
    out << '\n';
    out << "classes " << config.class_count << '\n';
    out << "taps";
    for (std::size_t t : config.tap_layers) out << ' ' << t;
    out << '\n';
    out << "activation " << (config.activation == Activation::relu ? "relu" : "tanh") << '\n';
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        write_matrix(out, "weight", params.weights[l]);
        write_matrix(out, "bias", params.biases[l]);
    }
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const ModelParams& params) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    save_checkpoint(out, config, params);
}

Checkpoint load_checkpoint(std::istream& in) {
    std::size_t line_no = 0;
    Checkpoint ck;
    {
        std::istringstream ss(expect_line(in, line_no));
        std::string magic;
        int version = 0;
        if (!(ss >> magic >> version) || magic != kCheckpointMagic) throw ParseError("not a checkpoint", line_no);
        if (version != kCheckpointVersion) throw ParseError(fmt::format("unsupported version {}", version), line_no);
    }
    auto keyed = [&](const char* key) {
        auto ss = std::make_unique<std::istringstream>(expect_line(in, line_no));
        std::string tag;
        if (!(*ss >> tag) || tag != key) throw ParseError(fmt::format("expected '{}'", key), line_no);
        return ss;
    };
    {
        auto ss = keyed("input_dim");
        if (!(*ss >> ck.config.input_dim)) throw ParseError("bad input_dim", line_no);
    }
    ck.config.hidden_dims = read_list<std::size_t>(*keyed("hidden"));
    {
        auto ss = keyed("classes");
        if (!(*ss >> ck.config.class_count)) throw ParseError("bad classes", line_no);
    }
    ck.config.tap_layers = read_list<std::size_t>(*keyed("taps"));
    {
        auto ss = keyed("activation");
        std::string act;
        *ss >> act;
        if (act == "relu") {
            ck.config.activation = Activation::relu;
        } else if (act == "tanh") {
            ck.config.activation = Activation::tanh;
        } else {
            throw ParseError("unknown activation '" + act + "'", line_no);
        }
    }
    ck.config.normalize();
    for (std::size_t l = 0; l < ck.config.layer_count(); ++l) {
        ck.params.weights.push_back(read_matrix(in, "weight", line_no));
        ck.params.biases.push_back(read_matrix(in, "bias", line_no));
    }
    ck.params.check_shapes(ck.config);
    return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    return load_checkpoint(in);
}

}  // namespace wmmd

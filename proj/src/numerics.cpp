#include "wmmd/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/core.h>

#include "wmmd/error.hpp"

namespace wmmd {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError(fmt::format("matrix {}x{} given {} values", rows_, cols_, data_.size()));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) throw IndexError(fmt::format("row {} out of range ({} rows)", indices[i], rows_));
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    }
    return out;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(fmt::format("{}: {}x{} vs {}x{}", op, a.rows(), a.cols(), b.rows(), b.cols()));
    }
}

}  // namespace

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double scale) {
    for (double& v : data_) v *= scale;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double scale) { return a *= scale; }

void require_finite(std::span<const double> values, std::string_view what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericError(fmt::format("non-finite value in {}", what));
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError(fmt::format("matmul: {}x{} by {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            auto b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    require_finite(out, "matmul");
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError(fmt::format("matmul_tn: ({}x{})^T by {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
    }
    Matrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto a_row = a.row(k);
        auto b_row = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = a_row[i];
            auto out_row = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
        }
    }
    require_finite(out, "matmul_tn");
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError(fmt::format("matmul_nt: {}x{} by ({}x{})^T", a.rows(), a.cols(), b.rows(), b.cols()));
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto a_row = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto b_row = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
            out(i, j) = acc;
        }
    }
    require_finite(out, "matmul_nt");
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError(fmt::format("distance: dimension {} vs {}", x.size(), y.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

Vector softmax(std::span<const double> logits) {
    if (logits.empty()) throw ShapeError("softmax of empty vector");
    require_finite(logits, "softmax input");
    const double peak = *std::max_element(logits.begin(), logits.end());
    Vector out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const Vector p = softmax(logits.row(r));
        std::copy(p.begin(), p.end(), out.row(r).begin());
    }
    return out;
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
    if (label >= probs.size()) {
        throw IndexError(fmt::format("label {} out of range for {} classes", label, probs.size()));
    }
    require_finite(probs, "cross_entropy input");
    return -std::log(std::max(probs[label], kLogFloor));
}

Vector softmax_cross_entropy_grad(std::span<const double> probs, std::size_t label) {
    if (label >= probs.size()) {
        throw IndexError(fmt::format("label {} out of range for {} classes", label, probs.size()));
    }
    Vector grad(probs.begin(), probs.end());
    grad[label] -= 1.0;
    return grad;
}

Matrix activate(const Matrix& pre, Activation act) {
    Matrix out = pre;
    for (double& v : out.values()) v = act == Activation::relu ? std::max(v, 0.0) : std::tanh(v);
    return out;
}

Matrix activation_backward(const Matrix& pre, const Matrix& grad_out, Activation act) {
    require_same_shape(pre, grad_out, "activation_backward");
    Matrix grad = grad_out;
    auto z = pre.values();
    auto g = grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (act == Activation::relu) {
            if (z[i] <= 0.0) g[i] = 0.0;
        } else {
            const double t = std::tanh(z[i]);
            g[i] *= 1.0 - t * t;
        }
    }
    return grad;
}

Matrix dense_forward(const Matrix& x, const Matrix& weight, const Matrix& bias) {
    if (bias.rows() != 1 || bias.cols() != weight.cols()) {
        throw ShapeError(fmt::format("dense: bias {}x{} for {} outputs", bias.rows(), bias.cols(), weight.cols()));
    }
    Matrix out = matmul(x, weight);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias(0, c);
    }
    return out;
}

DenseGrads dense_backward(const Matrix& x, const Matrix& weight, const Matrix& grad_out) {
    if (grad_out.rows() != x.rows() || grad_out.cols() != weight.cols()) {
        throw ShapeError("dense_backward: gradient shape does not match layer output");
    }
    DenseGrads g;
    g.weight = matmul_tn(x, grad_out);
    g.bias = Matrix(1, grad_out.cols());
    for (std::size_t r = 0; r < grad_out.rows(); ++r) {
        auto row = grad_out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) g.bias(0, c) += row[c];
    }
    g.input = matmul_nt(grad_out, weight);
    return g;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Gradients Gradients::zeros_like(std::span<const Matrix> weights, std::span<const Matrix> biases) {
    Gradients g;
    for (const auto& w : weights) g.weights.emplace_back(w.rows(), w.cols());
    for (const auto& b : biases) g.biases.emplace_back(b.rows(), b.cols());
    return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
    if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) {
        throw ShapeError("gradient sets differ in layer count");
    }
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += other.weights[i];
    for (std::size_t i = 0; i < biases.size(); ++i) biases[i] += other.biases[i];
    return *this;
}

Gradients& Gradients::operator*=(double scale) {
    for (auto& w : weights) w *= scale;
    for (auto& b : biases) b *= scale;
    return *this;
}

}  // namespace wmmd

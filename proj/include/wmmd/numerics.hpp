#pragma once

// Dense row-major matrices and the handful of differentiable operations the
// classifier needs. Every backward function here is explicit; there is no tape.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace wmmd {

using Vector = std::vector<double>;

// Floor applied to probabilities before taking a logarithm.
inline constexpr double kLogFloor = 1e-12;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    // A 1 x n matrix holding `values`.
    static Matrix row_vector(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    // Rows picked by index, in the order given.
    Matrix gather_rows(std::span<const std::size_t> indices) const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double scale);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double scale);

// Throws NumericError naming `what` if any entry is NaN or Inf.
void require_finite(std::span<const double> values, std::string_view what);
inline void require_finite(const Matrix& m, std::string_view what) { require_finite(m.values(), what); }

Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

double squared_distance(std::span<const double> x, std::span<const double> y);

// Max-subtracted softmax.
Vector softmax(std::span<const double> logits);
Matrix softmax_rows(const Matrix& logits);

// -log(max(probs[label], kLogFloor)).
double cross_entropy(std::span<const double> probs, std::size_t label);
// d cross_entropy(softmax(z), label) / dz = softmax(z) - onehot(label).
Vector softmax_cross_entropy_grad(std::span<const double> probs, std::size_t label);

enum class Activation { relu, tanh };

Matrix activate(const Matrix& pre, Activation act);
// Gradient w.r.t. the pre-activation given the gradient w.r.t. the output.
Matrix activation_backward(const Matrix& pre, const Matrix& grad_out, Activation act);

// Affine layer y = x W + b, with x: n x in, W: in x out, b: 1 x out.
Matrix dense_forward(const Matrix& x, const Matrix& weight, const Matrix& bias);

struct DenseGrads {
    Matrix input;
    Matrix weight;
    Matrix bias;
};

DenseGrads dense_backward(const Matrix& x, const Matrix& weight, const Matrix& grad_out);

// Derives an independent stream seed from a base seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Per-layer parameter gradients; shapes mirror the parameters they differentiate.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;

    static Gradients zeros_like(std::span<const Matrix> weights, std::span<const Matrix> biases);

    Gradients& operator+=(const Gradients& other);
    Gradients& operator*=(double scale);
};

}  // namespace wmmd

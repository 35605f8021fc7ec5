#include "wmmd/mmd.hpp"

#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "wmmd/error.hpp"

namespace wmmd {

AuxWeights AuxWeights::uniform(std::size_t class_count) {
    if (class_count == 0) throw ParameterError("need at least one class");
    const double p = 1.0 / static_cast<double>(class_count);
    return {Vector(class_count, p), Vector(class_count, p), Vector(class_count, 1.0)};
}

AuxWeights AuxWeights::from_priors(Vector source_priors, Vector target_priors) {
    if (source_priors.size() != target_priors.size()) {
        throw ParameterError(fmt::format("{} source priors vs {} target priors", source_priors.size(),
                                         target_priors.size()));
    }
    Vector alphas(source_priors.size(), 0.0);
    for (std::size_t c = 0; c < alphas.size(); ++c) {
        if (source_priors[c] > 0.0) alphas[c] = target_priors[c] / source_priors[c];
    }
    AuxWeights w{std::move(source_priors), std::move(target_priors), std::move(alphas)};
    w.validate();
    return w;
}

double AuxWeights::alpha(std::size_t label) const {
    if (label >= alphas.size()) {
        throw IndexError(fmt::format("label {} out of range for {} classes", label, alphas.size()));
    }
    return alphas[label];
}

namespace {

void validate_distribution(const Vector& p, const char* name) {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError(fmt::format("{} has entry {}", name, v));
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ParameterError(fmt::format("{} sums to {}", name, total));
}

}  // namespace

void AuxWeights::validate() const {
    if (alphas.empty()) throw ParameterError("auxiliary weights cover no classes");
    if (source_priors.size() != alphas.size() || target_priors.size() != alphas.size()) {
        throw ParameterError("auxiliary weight vectors differ in length");
    }
    validate_distribution(source_priors, "source priors");
    validate_distribution(target_priors, "target priors");
    for (double a : alphas) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError(fmt::format("alpha {} is negative", a));
    }
}

namespace {

void require_same_dim(const Matrix& src, const Matrix& tgt) {
    if (src.cols() != tgt.cols()) {
        throw ShapeError(fmt::format("source dimension {} vs target dimension {}", src.cols(), tgt.cols()));
    }
}

// Squared distance between sum_i w_i phi(s_i) / sum(w) and the target mean embedding.
double weighted_quadratic(const Matrix& src, std::span<const double> w, const Matrix& tgt,
                          const KernelSpec& spec) {
    require_same_dim(src, tgt);
    if (src.rows() == 0 || tgt.rows() == 0) throw DataError("quadratic MMD needs non-empty samples");
    const double w_total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(w_total > 0.0)) throw DegenerateWeightsError("source weights sum to zero");
    const auto n = static_cast<double>(tgt.rows());

    // k is symmetric and k(x, x) = sum of the betas.
    const double self = std::accumulate(spec.betas().begin(), spec.betas().end(), 0.0);
    double ss = 0.0;
    for (std::size_t i = 0; i < src.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = i + 1; j < src.rows(); ++j) row += w[j] * multi_kernel(src.row(i), src.row(j), spec);
        ss += w[i] * (w[i] * self + 2.0 * row);
    }
    double tt = self * static_cast<double>(tgt.rows());
    for (std::size_t i = 0; i < tgt.rows(); ++i)
        for (std::size_t j = i + 1; j < tgt.rows(); ++j) tt += 2.0 * multi_kernel(tgt.row(i), tgt.row(j), spec);
    double st = 0.0;
    for (std::size_t i = 0; i < src.rows(); ++i)
        for (std::size_t j = 0; j < tgt.rows(); ++j) st += w[i] * multi_kernel(src.row(i), tgt.row(j), spec);

    return ss / (w_total * w_total) + tt / (n * n) - 2.0 * st / (w_total * n);
}

QuadTuple tuple_at(const Matrix& src, const Matrix& tgt, std::size_t i) {
    return QuadTuple{src.row(2 * i), src.row(2 * i + 1), tgt.row(2 * i), tgt.row(2 * i + 1), {}, {}, {}, {}};
}

void require_labels(const QuadTuple& z) {
    if (!z.ys1 || !z.ys2) throw DataError("weighted h-statistic needs both source labels");
}

}  // namespace

double mmd2_quadratic(const Matrix& src, const Matrix& tgt, const KernelSpec& spec) {
    const Vector ones(src.rows(), 1.0);
    return weighted_quadratic(src, ones, tgt, spec);
}

double mmd2_unbiased(const Matrix& src, const Matrix& tgt, const KernelSpec& spec) {
    require_same_dim(src, tgt);
    if (src.rows() < 2 || tgt.rows() < 2) throw DataError("U-statistic needs at least 2 rows per domain");
    const auto m = static_cast<double>(src.rows());
    const auto n = static_cast<double>(tgt.rows());
    double ss = 0.0;
    for (std::size_t i = 0; i < src.rows(); ++i)
        for (std::size_t j = i + 1; j < src.rows(); ++j) ss += multi_kernel(src.row(i), src.row(j), spec);
    double tt = 0.0;
    for (std::size_t i = 0; i < tgt.rows(); ++i)
        for (std::size_t j = i + 1; j < tgt.rows(); ++j) tt += multi_kernel(tgt.row(i), tgt.row(j), spec);
    double st = 0.0;
    for (std::size_t i = 0; i < src.rows(); ++i)
        for (std::size_t j = 0; j < tgt.rows(); ++j) st += multi_kernel(src.row(i), tgt.row(j), spec);
    return 2.0 * ss / (m * (m - 1.0)) + 2.0 * tt / (n * (n - 1.0)) - 2.0 * st / (m * n);
}

double h_l(const QuadTuple& z, const KernelSpec& spec) {
    return multi_kernel(z.xs1, z.xs2, spec) + multi_kernel(z.xt1, z.xt2, spec) - multi_kernel(z.xs1, z.xt2, spec) -
           multi_kernel(z.xs2, z.xt1, spec);
}

std::size_t linear_pair_count(std::size_t src_rows, std::size_t tgt_rows) {
    const std::size_t m = std::min(src_rows, tgt_rows) / 2 * 2;
    if (m < 2) throw DataError(fmt::format("linear estimator needs 2 rows per domain (got {} and {})", src_rows, tgt_rows));
    return m;
}

double mmd2_linear(const Matrix& src, const Matrix& tgt, const KernelSpec& spec) {
    require_same_dim(src, tgt);
    const std::size_t m = linear_pair_count(src.rows(), tgt.rows());
    double acc = 0.0;
    for (std::size_t i = 0; i < m / 2; ++i) acc += h_l(tuple_at(src, tgt, i), spec);
    return 2.0 * acc / static_cast<double>(m);
}

double wmmd2_quadratic(const Matrix& src, std::span<const std::size_t> src_labels, const Matrix& tgt,
                       const AuxWeights& weights, const KernelSpec& spec) {
    if (src_labels.size() != src.rows()) {
        throw ShapeError(fmt::format("{} labels for {} source rows", src_labels.size(), src.rows()));
    }
    Vector w(src.rows());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = weights.alpha(src_labels[i]);
    return weighted_quadratic(src, w, tgt, spec);
}

double h_lw(const QuadTuple& z, const AuxWeights& weights, const KernelSpec& spec) {
    require_labels(z);
    const double a1 = weights.alpha(*z.ys1);
    const double a2 = weights.alpha(*z.ys2);
    return a1 * a2 * multi_kernel(z.xs1, z.xs2, spec) + multi_kernel(z.xt1, z.xt2, spec) -
           a1 * multi_kernel(z.xs1, z.xt2, spec) - a2 * multi_kernel(z.xs2, z.xt1, spec);
}

QuadGrads h_lw_grad(const QuadTuple& z, const AuxWeights& weights, const KernelSpec& spec) {
    require_labels(z);
    const double a1 = weights.alpha(*z.ys1);
    const double a2 = weights.alpha(*z.ys2);
    QuadGrads g{Vector(z.xs1.size(), 0.0), Vector(z.xs2.size(), 0.0), Vector(z.xt1.size(), 0.0),
                Vector(z.xt2.size(), 0.0)};
    multi_kernel_accumulate(z.xs1, z.xs2, spec, a1 * a2, g.xs1, g.xs2);
    multi_kernel_accumulate(z.xt1, z.xt2, spec, 1.0, g.xt1, g.xt2);
    multi_kernel_accumulate(z.xs1, z.xt2, spec, -a1, g.xs1, g.xt2);
    multi_kernel_accumulate(z.xs2, z.xt1, spec, -a2, g.xs2, g.xt1);
    return g;
}

Vector batch_alphas(std::span<const std::size_t> src_labels, std::size_t count, const AuxWeights& weights) {
    if (count > src_labels.size()) throw ShapeError("fewer source labels than rows in use");
    Vector a(count);
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        a[i] = weights.alpha(src_labels[i]);
        total += a[i];
    }
    if (!(total > 0.0)) throw DegenerateWeightsError("source weights in batch sum to zero");
    const double scale = static_cast<double>(count) / total;
    if (scale != 1.0) {
        for (double& v : a) v *= scale;
    }
    return a;
}

namespace {

// Aux weights whose alphas are the given per-row values, indexed by row.
struct RowWeights {
    AuxWeights weights;
    Labels labels;
};

RowWeights per_row(const Vector& row_alphas) {
    RowWeights rw;
    rw.weights.alphas = row_alphas;
    rw.labels.resize(row_alphas.size());
    std::iota(rw.labels.begin(), rw.labels.end(), std::size_t{0});
    return rw;
}

}  // namespace

double wmmd2_linear(const Matrix& src, std::span<const std::size_t> src_labels, const Matrix& tgt,
                    const AuxWeights& weights, const KernelSpec& spec) {
    require_same_dim(src, tgt);
    const std::size_t m = linear_pair_count(src.rows(), tgt.rows());
    const RowWeights rw = per_row(batch_alphas(src_labels, m, weights));
    double acc = 0.0;
    for (std::size_t i = 0; i < m / 2; ++i) {
        QuadTuple z = tuple_at(src, tgt, i);
        z.ys1 = rw.labels[2 * i];
        z.ys2 = rw.labels[2 * i + 1];
        acc += h_lw(z, rw.weights, spec);
    }
    return 2.0 * acc / static_cast<double>(m);
}

LinearEstimate wmmd2_linear_with_grad(const Matrix& src, std::span<const std::size_t> src_labels,
                                      const Matrix& tgt, const AuxWeights& weights, const KernelSpec& spec) {
    require_same_dim(src, tgt);
    const std::size_t m = linear_pair_count(src.rows(), tgt.rows());
    const Vector a = batch_alphas(src_labels, m, weights);
    const double scale = 2.0 / static_cast<double>(m);

    LinearEstimate est;
    est.grad_source = Matrix(src.rows(), src.cols());
    est.grad_target = Matrix(tgt.rows(), tgt.cols());
    double acc = 0.0;
    for (std::size_t i = 0; i < m / 2; ++i) {
        const std::size_t p = 2 * i;
        const std::size_t q = 2 * i + 1;
        const double a1 = a[p];
        const double a2 = a[q];
        acc += multi_kernel_accumulate(src.row(p), src.row(q), spec, scale * a1 * a2, est.grad_source.row(p),
                                       est.grad_source.row(q)) *
               a1 * a2;
        acc += multi_kernel_accumulate(tgt.row(p), tgt.row(q), spec, scale, est.grad_target.row(p),
                                       est.grad_target.row(q));
        acc -= a1 * multi_kernel_accumulate(src.row(p), tgt.row(q), spec, -scale * a1, est.grad_source.row(p),
                                            est.grad_target.row(q));
        acc -= a2 * multi_kernel_accumulate(src.row(q), tgt.row(p), spec, -scale * a2, est.grad_source.row(q),
                                            est.grad_target.row(p));
    }
    est.value = scale * acc;
    return est;
}

}  // namespace wmmd

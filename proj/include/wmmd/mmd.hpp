#pragma once

// Maximum mean discrepancy estimators, plain and class-reweighted.
//
// Quadratic forms expand the squared RKHS distance between (weighted) mean
// embeddings through the kernel. Linear-time forms average an h-statistic over
// non-overlapping quad-tuples (two source rows, two target rows) taken in
// presentation order: rows (2i, 2i+1) of each domain form tuple i. Both domains
// are truncated to the largest even count not exceeding min(M, N).

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wmmd/kernels.hpp"
#include "wmmd/numerics.hpp"

namespace wmmd {

using Labels = std::vector<std::size_t>;

// Per-class auxiliary weights alpha_c with the priors they were derived from.
struct AuxWeights {
    Vector source_priors;
    Vector target_priors;
    Vector alphas;

    // Uniform priors and alpha = 1 for every class.
    static AuxWeights uniform(std::size_t class_count);
    // alpha_c = target_c / source_c, or 0 where the source prior vanishes.
    static AuxWeights from_priors(Vector source_priors, Vector target_priors);

    std::size_t class_count() const noexcept { return alphas.size(); }
    double alpha(std::size_t label) const;

    // Throws ParameterError if the priors are not distributions or alphas are negative.
    void validate() const;
};

struct QuadTuple {
    std::span<const double> xs1;
    std::span<const double> xs2;
    std::span<const double> xt1;
    std::span<const double> xt2;
    std::optional<std::size_t> ys1;
    std::optional<std::size_t> ys2;
    std::optional<std::size_t> yt1;
    std::optional<std::size_t> yt2;
};

// (1/M^2) sum k(s,s') + (1/N^2) sum k(t,t') - (2/MN) sum k(s,t).
double mmd2_quadratic(const Matrix& src, const Matrix& tgt, const KernelSpec& spec);

// Unbiased U-statistic: within-domain sums exclude the diagonal.
double mmd2_unbiased(const Matrix& src, const Matrix& tgt, const KernelSpec& spec);

// k(xs1,xs2) + k(xt1,xt2) - k(xs1,xt2) - k(xs2,xt1).
double h_l(const QuadTuple& z, const KernelSpec& spec);

// (2/M) sum_i h_l(z_i).
double mmd2_linear(const Matrix& src, const Matrix& tgt, const KernelSpec& spec);

// Squared distance between the alpha-weighted source mean embedding
// (normalized by sum_i alpha_{y_i}) and the target mean embedding.
double wmmd2_quadratic(const Matrix& src, std::span<const std::size_t> src_labels, const Matrix& tgt,
                       const AuxWeights& weights, const KernelSpec& spec);

// a1 a2 k(xs1,xs2) + k(xt1,xt2) - a1 k(xs1,xt2) - a2 k(xs2,xt1), with a = alpha_{ys}.
double h_lw(const QuadTuple& z, const AuxWeights& weights, const KernelSpec& spec);

struct QuadGrads {
    Vector xs1;
    Vector xs2;
    Vector xt1;
    Vector xt2;
};

QuadGrads h_lw_grad(const QuadTuple& z, const AuxWeights& weights, const KernelSpec& spec);

// Number of rows per domain the linear estimators use for batches of M and N rows.
std::size_t linear_pair_count(std::size_t src_rows, std::size_t tgt_rows);

// alpha_{y_i} for the first `count` labels, rescaled so their mean is 1.
Vector batch_alphas(std::span<const std::size_t> src_labels, std::size_t count, const AuxWeights& weights);

// (2/M) sum_i h_lw(z_i) with per-batch alphas from batch_alphas().
double wmmd2_linear(const Matrix& src, std::span<const std::size_t> src_labels, const Matrix& tgt,
                    const AuxWeights& weights, const KernelSpec& spec);

struct LinearEstimate {
    double value = 0.0;
    Matrix grad_source;  // d value / d src row; rows past the truncation are zero
    Matrix grad_target;
};

// wmmd2_linear together with its gradient with respect to every input row.
LinearEstimate wmmd2_linear_with_grad(const Matrix& src, std::span<const std::size_t> src_labels,
                                      const Matrix& tgt, const AuxWeights& weights, const KernelSpec& spec);

}  // namespace wmmd

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmmd/numerics.hpp"

namespace wmmd {

// Convex combination of Gaussian RBF basis kernels:
//   k(x, y) = sum_l beta_l * exp(-|x - y|^2 / (2 sigma_l^2)).
class KernelSpec {
public:
    // Throws ParameterError unless every bandwidth is positive, every beta is
    // nonnegative, the lists have equal non-zero length and betas sum to 1.
    KernelSpec(std::vector<double> bandwidths, std::vector<double> betas);

    // Single kernel with the given bandwidth.
    static KernelSpec single(double sigma);
    // Bandwidths sigma * {0.25, 0.5, 1, 2, 4}, uniform betas.
    static KernelSpec multi_scale(double sigma);

    const std::vector<double>& bandwidths() const noexcept { return bandwidths_; }
    const std::vector<double>& betas() const noexcept { return betas_; }
    std::size_t basis_count() const noexcept { return bandwidths_.size(); }

    // Same betas, every bandwidth multiplied by `factor`.
    KernelSpec scaled(double factor) const;

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

private:
    std::vector<double> bandwidths_;
    std::vector<double> betas_;
};

double rbf(std::span<const double> x, std::span<const double> y, double sigma);

double multi_kernel(std::span<const double> x, std::span<const double> y, const KernelSpec& spec);

// d k(x, y) / dx.
Vector multi_kernel_grad_x(std::span<const double> x, std::span<const double> y, const KernelSpec& spec);

// Accumulates scale * d k(x, y) / dx into `out_x` and scale * d k(x, y) / dy
// into `out_y`, and returns k(x, y). Used by the estimator gradients.
double multi_kernel_accumulate(std::span<const double> x, std::span<const double> y, const KernelSpec& spec,
                               double scale, std::span<double> out_x, std::span<double> out_y);

inline constexpr std::size_t kMedianSubsampleCap = 1000;
inline constexpr std::uint64_t kMedianSeed = 0x5eed;

// Median pairwise Euclidean distance between rows, computed on a seeded
// subsample of at most kMedianSubsampleCap rows. A zero median falls back to 1.
double median_heuristic(const Matrix& data, std::uint64_t seed = kMedianSeed);

}  // namespace wmmd

#include "wmmd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/core.h>

#include "wmmd/error.hpp"

namespace wmmd {

KernelSpec::KernelSpec(std::vector<double> bandwidths, std::vector<double> betas)
    : bandwidths_(std::move(bandwidths)), betas_(std::move(betas)) {
    if (bandwidths_.empty()) throw ParameterError("kernel spec needs at least one basis kernel");
    if (bandwidths_.size() != betas_.size()) {
        throw ParameterError(fmt::format("{} bandwidths but {} betas", bandwidths_.size(), betas_.size()));
    }
    for (double s : bandwidths_) {
        if (!(s > 0.0) || !std::isfinite(s)) throw ParameterError(fmt::format("bandwidth {} is not positive", s));
    }
    double total = 0.0;
    for (double b : betas_) {
        if (!(b >= 0.0) || !std::isfinite(b)) throw ParameterError(fmt::format("beta {} is negative", b));
        total += b;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ParameterError(fmt::format("betas sum to {}, not 1", total));
}

KernelSpec KernelSpec::single(double sigma) { return KernelSpec({sigma}, {1.0}); }

KernelSpec KernelSpec::multi_scale(double sigma) {
    std::vector<double> bw;
    for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) bw.push_back(sigma * f);
    return KernelSpec(std::move(bw), std::vector<double>(5, 0.2));
}

KernelSpec KernelSpec::scaled(double factor) const {
    std::vector<double> bw = bandwidths_;
    for (double& s : bw) s *= factor;
    return KernelSpec(std::move(bw), betas_);
}

double rbf(std::span<const double> x, std::span<const double> y, double sigma) {
    if (!(sigma > 0.0)) throw ParameterError(fmt::format("rbf bandwidth {} is not positive", sigma));
    return std::exp(-squared_distance(x, y) / (2.0 * sigma * sigma));
}

double multi_kernel(std::span<const double> x, std::span<const double> y, const KernelSpec& spec) {
    const double d2 = squared_distance(x, y);
    double k = 0.0;
    for (std::size_t l = 0; l < spec.basis_count(); ++l) {
        const double s = spec.bandwidths()[l];
        k += spec.betas()[l] * std::exp(-d2 / (2.0 * s * s));
    }
    return k;
}

Vector multi_kernel_grad_x(std::span<const double> x, std::span<const double> y, const KernelSpec& spec) {
    Vector gx(x.size(), 0.0);
    Vector gy(y.size(), 0.0);
    multi_kernel_accumulate(x, y, spec, 1.0, gx, gy);
    return gx;
}

double multi_kernel_accumulate(std::span<const double> x, std::span<const double> y, const KernelSpec& spec,
                               double scale, std::span<double> out_x, std::span<double> out_y) {
    const double d2 = squared_distance(x, y);
    double k = 0.0;
    // dk/dx = sum_l beta_l k_l (y - x) / sigma_l^2
    double coeff = 0.0;
    for (std::size_t l = 0; l < spec.basis_count(); ++l) {
        const double s2 = spec.bandwidths()[l] * spec.bandwidths()[l];
        const double kl = spec.betas()[l] * std::exp(-d2 / (2.0 * s2));
        k += kl;
        coeff += kl / s2;
    }
    coeff *= scale;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double g = coeff * (y[i] - x[i]);
        out_x[i] += g;
        out_y[i] -= g;
    }
    return k;
}

double median_heuristic(const Matrix& data, std::uint64_t seed) {
    if (data.rows() < 2) throw DataError("median heuristic needs at least 2 rows");
    std::vector<std::size_t> rows(data.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (rows.size() > kMedianSubsampleCap) {
        std::mt19937_64 rng(seed);
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(kMedianSubsampleCap);
        std::sort(rows.begin(), rows.end());
    }
    std::vector<double> dists;
    dists.reserve(rows.size() * (rows.size() - 1) / 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j)
            dists.push_back(std::sqrt(squared_distance(data.row(rows[i]), data.row(rows[j]))));

    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    double median = dists[mid];
    if (dists.size() % 2 == 0) {
        const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    if (!(median > 0.0) || !std::isfinite(median)) return 1.0;
    return median;
}

}  // namespace wmmd

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "wmmd/mmd.hpp"
#include "wmmd/numerics.hpp"

namespace wmmd {

enum class Domain { source, target };

struct Dataset {
    Matrix features;
    Labels labels;  // empty when unlabeled
    std::size_t class_count = 0;
    Domain domain = Domain::source;

    std::size_t size() const noexcept { return features.rows(); }
    std::size_t dim() const noexcept { return features.cols(); }
    bool has_labels() const noexcept { return !labels.empty(); }
};

// Gaussian class-conditional mixture. Class c draws
//   x = means[c] + scales[c] * N(0, I)  (+ domain_shift[c] in the target domain).
struct MixtureSpec {
    std::vector<Vector> means;
    Vector scales;
    Vector priors;
    std::vector<Vector> domain_shift;

    std::size_t class_count() const noexcept { return means.size(); }
    std::size_t dim() const noexcept { return means.empty() ? 0 : means.front().size(); }

    // Throws ParameterError on inconsistent shapes or invalid priors.
    void validate() const;

    // Class c centred at separation * e_c in `dim` dimensions, unit scale,
    // uniform priors, every coordinate of the target shifted by `shift`.
    static MixtureSpec simplex(std::size_t class_count, std::size_t dim, double separation = 3.0,
                               double shift = 0.5);

    MixtureSpec with_priors(Vector new_priors) const;
};

Dataset sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed,
                       Domain domain = Domain::source);

// Unlabeled target features. The labels are kept for scoring only and are not
// reachable through features().
class TargetSet {
public:
    TargetSet() = default;
    explicit TargetSet(Dataset labeled) : data_(std::move(labeled)) { data_.domain = Domain::target; }

    const Matrix& features() const noexcept { return data_.features; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t class_count() const noexcept { return data_.class_count; }

    // Labeled view for evaluation code.
    const Dataset& evaluation_view() const noexcept { return data_; }

private:
    Dataset data_;
};

struct DomainPair {
    Dataset source;
    TargetSet target;
};

// Source drawn with base.priors, target with `target_priors` plus the domain
// shift; both share the class conditionals.
DomainPair make_bias_pair(const MixtureSpec& base, const Vector& target_priors, std::size_t n_source,
                          std::size_t n_target, std::uint64_t seed);

// Empirical class frequencies over `class_count` classes.
Vector class_frequencies(std::span<const std::size_t> labels, std::size_t class_count);

// Bootstrap indices drawn with probability proportional to alpha_{label}.
std::vector<std::size_t> resample_by_class_weight(std::span<const std::size_t> labels, const Vector& alphas,
                                                  std::size_t n, std::uint64_t seed);

struct CsvSchema {
    // Whether the final column is an integer label; unset means "only if the
    // header names the last column 'label'".
    std::optional<bool> has_label;
    // Class count for labeled data; unset means max label + 1.
    std::optional<std::size_t> class_count;
};

// Comma-separated values, optional single header line, one sample per row.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void write_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace wmmd

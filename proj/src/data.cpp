#include "wmmd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <string_view>

#include <fmt/core.h>

#include "wmmd/error.hpp"

namespace wmmd {

void MixtureSpec::validate() const {
    const std::size_t c = class_count();
    if (c == 0) throw ParameterError("mixture has no classes");
    if (dim() == 0) throw ParameterError("mixture means are zero-dimensional");
    if (scales.size() != c || priors.size() != c || domain_shift.size() != c) {
        throw ParameterError("mixture fields disagree on the class count");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        if (means[k].size() != dim() || domain_shift[k].size() != dim()) {
            throw ParameterError(fmt::format("class {} vectors do not have dimension {}", k, dim()));
        }
        if (!(scales[k] > 0.0)) throw ParameterError(fmt::format("class {} scale {} is not positive", k, scales[k]));
        if (!(priors[k] >= 0.0)) throw ParameterError(fmt::format("class {} prior {} is negative", k, priors[k]));
        total += priors[k];
    }
    if (std::abs(total - 1.0) > 1e-9) throw ParameterError(fmt::format("priors sum to {}", total));
}

MixtureSpec MixtureSpec::simplex(std::size_t class_count, std::size_t dim, double separation, double shift) {
    if (dim < class_count) throw ParameterError("simplex arrangement needs dim >= class count");
    MixtureSpec spec;
    for (std::size_t c = 0; c < class_count; ++c) {
        Vector mean(dim, 0.0);
        mean[c] = separation;
        spec.means.push_back(std::move(mean));
        spec.domain_shift.emplace_back(dim, shift);
    }
    spec.scales.assign(class_count, 1.0);
    spec.priors.assign(class_count, 1.0 / static_cast<double>(class_count));
    return spec;
}

MixtureSpec MixtureSpec::with_priors(Vector new_priors) const {
    MixtureSpec out = *this;
    out.priors = std::move(new_priors);
    out.validate();
    return out;
}

namespace {

std::size_t draw_class(const Vector& priors, double u) {
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t c = 0; c < priors.size(); ++c) {
        if (priors[c] <= 0.0) continue;
        cumulative += priors[c];
        last_positive = c;
        if (u < cumulative) return c;
    }
    return last_positive;
}

}  // namespace

Dataset sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed, Domain domain) {
    spec.validate();
    if (n == 0) throw ParameterError("sample count must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Dataset out;
    out.features = Matrix(n, spec.dim());
    out.labels.resize(n);
    out.class_count = spec.class_count();
    out.domain = domain;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = draw_class(spec.priors, uniform(rng));
        out.labels[i] = c;
        auto row = out.features.row(i);
        for (std::size_t d = 0; d < row.size(); ++d) {
            row[d] = spec.means[c][d] + spec.scales[c] * normal(rng);
            if (domain == Domain::target) row[d] += spec.domain_shift[c][d];
        }
    }
    return out;
}

DomainPair make_bias_pair(const MixtureSpec& base, const Vector& target_priors, std::size_t n_source,
                          std::size_t n_target, std::uint64_t seed) {
    const MixtureSpec target_spec = base.with_priors(target_priors);
    DomainPair pair;
    pair.source = sample_mixture(base, n_source, mix_seed(seed, 0), Domain::source);
    pair.target = TargetSet(sample_mixture(target_spec, n_target, mix_seed(seed, 1), Domain::target));
    return pair;
}

Vector class_frequencies(std::span<const std::size_t> labels, std::size_t class_count) {
    if (labels.empty()) throw DataError("no labels to count");
    Vector freq(class_count, 0.0);
    for (std::size_t y : labels) {
        if (y >= class_count) throw IndexError(fmt::format("label {} out of range for {} classes", y, class_count));
        freq[y] += 1.0;
    }
    for (double& f : freq) f /= static_cast<double>(labels.size());
    return freq;
}

std::vector<std::size_t> resample_by_class_weight(std::span<const std::size_t> labels, const Vector& alphas,
                                                  std::size_t n, std::uint64_t seed) {
    if (labels.empty()) throw DataError("nothing to resample");
    std::vector<double> w(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= alphas.size()) throw IndexError(fmt::format("label {} has no weight", labels[i]));
        w[i] = alphas[labels[i]];
    }
    std::vector<double> cumulative(w.size());
    std::partial_sum(w.begin(), w.end(), cumulative.begin());
    const double total = cumulative.back();
    if (!(total > 0.0)) throw DegenerateWeightsError("resampling weights sum to zero");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, total);
    std::vector<std::size_t> out(n);
    for (auto& idx : out) {
        const double u = uniform(rng);
        idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        idx = std::min(idx, w.size() - 1);
    }
    return out;
}

// ---- CSV ----

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::string buf(s);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::size_t> parse_label(std::string_view s) {
    s = trim(s);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> width;
    std::optional<bool> has_label = schema.has_label;
    std::vector<double> values;
    Labels labels;
    std::size_t rows = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        if (!width) {
            const bool is_header = std::none_of(fields.begin(), fields.end(),
                                                [](std::string_view f) { return parse_double(f).has_value(); });
            if (is_header) {
                if (rows > 0) throw ParseError("header after data", line_no);
                width = fields.size();
                if (!has_label) has_label = trim(fields.back()) == "label";
                continue;
            }
            width = fields.size();
        }
        if (fields.size() != *width) {
            throw SchemaError(fmt::format("line {}: expected {} columns, found {}", line_no, *width, fields.size()));
        }
        if (!has_label) has_label = false;
        const std::size_t feature_cols = *has_label ? fields.size() - 1 : fields.size();
        if (feature_cols == 0) throw SchemaError("no feature columns");
        for (std::size_t c = 0; c < feature_cols; ++c) {
            const auto v = parse_double(fields[c]);
            if (!v) throw ParseError(fmt::format("column {} is not a number", c + 1), line_no);
            values.push_back(*v);
        }
        if (*has_label) {
            const auto y = parse_label(fields.back());
            if (!y) throw ParseError("label is not a nonnegative integer", line_no);
            labels.push_back(*y);
        }
        ++rows;
    }
    if (rows == 0) throw DataError(path.string() + " holds no samples");

    Dataset out;
    const std::size_t dim = values.size() / rows;
    out.features = Matrix(rows, dim, std::move(values));
    out.labels = std::move(labels);
    if (out.has_labels()) {
        const std::size_t max_label = *std::max_element(out.labels.begin(), out.labels.end());
        out.class_count = schema.class_count.value_or(max_label + 1);
        if (max_label >= out.class_count) {
            throw SchemaError(fmt::format("label {} exceeds class count {}", max_label, out.class_count));
        }
    } else {
        out.class_count = schema.class_count.value_or(0);
    }
    return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (std::size_t c = 0; c < data.dim(); ++c) out << (c ? "," : "") << "x" << c;
    if (data.has_labels()) out << ",label";
    out << '\n';
    for (std::size_t r = 0; r < data.size(); ++r) {
        auto row = data.features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << fmt::format("{}", row[c]);
        if (data.has_labels()) out << ',' << data.labels[r];
        out << '\n';
    }
}

}  // namespace wmmd

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "wmmd/data.hpp"
#include "wmmd/error.hpp"
#include "wmmd/mmd.hpp"

using namespace wmmd;

namespace {

const std::filesystem::path kFixtures = WMMD_FIXTURE_DIR;

MixtureSpec blobs(Vector priors) {
    MixtureSpec m;
    m.means = {{-1.0, 0.0}, {1.0, 0.0}};
    m.scales = {0.5, 0.5};
    m.priors = std::move(priors);
    m.domain_shift = {{0.0, 0.0}, {0.0, 0.0}};
    return m;
}

}  // namespace

TEST_CASE("MixtureSpec validation") {
    CHECK_NOTHROW(blobs({0.5, 0.5}).validate());
    CHECK_THROWS_AS(blobs({0.5, 0.6}).validate(), ParameterError);
    CHECK_THROWS_AS(blobs({1.5, -0.5}).validate(), ParameterError);
    MixtureSpec bad = blobs({0.5, 0.5});
    bad.scales = {1.0};
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = blobs({0.5, 0.5});
    bad.means[1] = {1.0};
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = blobs({0.5, 0.5});
    bad.scales[0] = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    CHECK_THROWS_AS(sample_mixture(bad, 10, 1), ParameterError);

    const MixtureSpec s = MixtureSpec::simplex(3, 4);
    CHECK(s.class_count() == 3);
    CHECK(s.dim() == 4);
    CHECK(s.means[1] == Vector{0.0, 3.0, 0.0, 0.0});
    CHECK(s.domain_shift[2] == Vector{0.5, 0.5, 0.5, 0.5});
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("sample_mixture examples") {
    const Dataset only0 = sample_mixture(blobs({1.0, 0.0}), 200, 3);
    for (auto y : only0.labels) CHECK(y == 0);

    const Dataset big = sample_mixture(blobs({0.3, 0.7}), 10000, 4);
    const Vector f = class_frequencies(big.labels, 2);
    CHECK(std::abs(f[0] - 0.3) < 0.02);
    CHECK(std::abs(f[1] - 0.7) < 0.02);

    const Dataset a = sample_mixture(blobs({0.5, 0.5}), 50, 5);
    const Dataset b = sample_mixture(blobs({0.5, 0.5}), 50, 5);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK_FALSE(sample_mixture(blobs({0.5, 0.5}), 50, 6).features == a.features);
    CHECK_THROWS_AS(sample_mixture(blobs({0.5, 0.5}), 0, 5), ParameterError);
}

TEST_CASE("target samples carry the domain shift") {
    MixtureSpec m = blobs({1.0, 0.0});
    m.domain_shift = {{10.0, -10.0}, {0.0, 0.0}};
    const Dataset s = sample_mixture(m, 500, 7, Domain::source);
    const Dataset t = sample_mixture(m, 500, 7, Domain::target);
    for (std::size_t i = 0; i < 500; ++i) {
        CHECK(t.features(i, 0) - s.features(i, 0) == doctest::Approx(10.0));
        CHECK(t.features(i, 1) - s.features(i, 1) == doctest::Approx(-10.0));
    }
    CHECK(t.domain == Domain::target);
}

TEST_CASE("make_bias_pair") {
    const DomainPair same = make_bias_pair(blobs({0.5, 0.5}), {0.5, 0.5}, 400, 400, 8);
    const KernelSpec spec = KernelSpec::multi_scale(1.0);
    const DomainPair small = make_bias_pair(blobs({0.5, 0.5}), {0.5, 0.5}, 50, 50, 8);
    const double big_n = mmd2_quadratic(same.source.features, same.target.features(), spec);
    const double small_n = mmd2_quadratic(small.source.features, small.target.features(), spec);
    CHECK(big_n < 0.01);
    CHECK(big_n < small_n);

    const DomainPair biased = make_bias_pair(blobs({0.5, 0.5}), {0.9, 0.1}, 400, 5000, 9);
    const Vector f = class_frequencies(biased.target.evaluation_view().labels, 2);
    CHECK(std::abs(f[0] - 0.9) < 0.02);

    const DomainPair one_class = make_bias_pair(blobs({0.5, 0.5}), {1.0, 0.0}, 100, 100, 10);
    for (auto y : one_class.target.evaluation_view().labels) CHECK(y == 0);
    CHECK(one_class.target.size() == 100);
    CHECK(one_class.target.features().cols() == 2);
    CHECK(one_class.target.evaluation_view().domain == Domain::target);

    CHECK_THROWS_AS(make_bias_pair(blobs({0.5, 0.5}), {0.9, 0.2}, 10, 10, 1), ParameterError);
}

TEST_CASE("class frequencies") {
    CHECK(class_frequencies(Labels{1, 1, 0, 2}, 3) == Vector{0.25, 0.5, 0.25});
    CHECK_THROWS_AS(class_frequencies(Labels{}, 2), DataError);
    CHECK_THROWS_AS(class_frequencies(Labels{0, 3}, 2), IndexError);
}

TEST_CASE("resampling by true alpha reproduces target priors") {
    const Dataset src = sample_mixture(blobs({0.5, 0.5}), 10000, 11);
    const AuxWeights w = AuxWeights::from_priors({0.5, 0.5}, {0.8, 0.2});
    const auto idx = resample_by_class_weight(src.labels, w.alphas, 10000, 12);
    Labels drawn;
    for (auto i : idx) drawn.push_back(src.labels[i]);
    const Vector f = class_frequencies(drawn, 2);
    CHECK(std::abs(f[0] - 0.8) < 0.02);
    CHECK(std::abs(f[1] - 0.2) < 0.02);
    CHECK(resample_by_class_weight(src.labels, w.alphas, 50, 13) == resample_by_class_weight(src.labels, w.alphas, 50, 13));
    CHECK_THROWS_AS(resample_by_class_weight(src.labels, Vector{0.0, 0.0}, 10, 1), DegenerateWeightsError);
    CHECK_THROWS_AS(resample_by_class_weight(src.labels, Vector{1.0}, 10, 1), IndexError);
}

TEST_CASE("load_csv examples") {
    const Dataset three = load_csv(kFixtures / "three_rows.csv");
    CHECK(three.size() == 3);
    CHECK(three.dim() == 2);
    CHECK_FALSE(three.has_labels());
    CHECK(three.features(2, 0) == 3.25);

    const Dataset labeled = load_csv(kFixtures / "labeled.csv");
    CHECK(labeled.labels == Labels{0, 1, 2});
    CHECK(labeled.class_count == 3);
    CHECK(labeled.dim() == 2);

    const Dataset unlabeled = load_csv(kFixtures / "labeled.csv", CsvSchema{false, std::nullopt});
    CHECK(unlabeled.dim() == 3);
    CHECK_FALSE(unlabeled.has_labels());
    CHECK(load_csv(kFixtures / "labeled.csv", CsvSchema{std::nullopt, 5}).class_count == 5);
    CHECK_THROWS_AS(load_csv(kFixtures / "three_rows.csv", CsvSchema{true, std::nullopt}), ParseError);
    CHECK_THROWS_AS(load_csv(kFixtures / "labeled.csv", CsvSchema{true, 2}), SchemaError);
}

TEST_CASE("load_csv errors") {
    CHECK_THROWS_AS(load_csv(kFixtures / "empty.csv"), DataError);
    CHECK_THROWS_AS(load_csv(kFixtures / "missing.csv"), DataError);
    CHECK_THROWS_AS(load_csv(kFixtures / "ragged.csv"), SchemaError);
    try {
        load_csv(kFixtures / "bad_number.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    try {
        load_csv(kFixtures / "bad_label.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("write_csv round-trips") {
    const Dataset d = sample_mixture(blobs({0.5, 0.5}), 25, 14);
    const auto path = std::filesystem::temp_directory_path() / "wmmd_test_roundtrip.csv";
    write_csv(path, d);
    const Dataset back = load_csv(path);
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
    std::filesystem::remove(path);
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wmmd/error.hpp"
#include "wmmd/experiments.hpp"

using namespace wmmd;
namespace fs = std::filesystem;

namespace {

RunConfig quick(ExperimentKind kind) {
    RunConfig c = RunConfig::defaults(kind);
    c.seeds = {1, 2};
    c.n_source = 64;
    c.n_target = 64;
    c.train.epochs = 3;
    c.bias_levels = {0.5, 0.9};
    c.lambda_grid = {0.0, 0.4};
    return c;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("arm settings") {
    TrainConfig base;
    base.lambda = 0.7;
    base.gamma = 0.2;
    const TrainConfig src = arm_config(base, Arm::source_only);
    CHECK(src.lambda == 0.0);
    CHECK(src.gamma == 0.0);
    const TrainConfig dan = arm_config(base, Arm::dan);
    CHECK(dan.lambda == 0.7);
    CHECK_FALSE(dan.estimate_alpha);
    CHECK(arm_config(base, Arm::wdan).estimate_alpha);
}

TEST_CASE("bias sweep has one row per level, arm and seed") {
    const auto rows = run_bias_sweep(quick(ExperimentKind::bias_sweep));
    CHECK(rows.size() == 2 * 3 * 2);
    CHECK(rows[0].arm == Arm::source_only);
    CHECK(rows[0].setting == 0.5);
    CHECK(rows.back().arm == Arm::wdan);
    CHECK(rows.back().setting == 0.9);
    for (const CellResult& r : rows) {
        CHECK(r.ok);
        CHECK(r.loss_history.size() == 3);
    }
}

TEST_CASE("failed cells are recorded and the sweep continues") {
    RunConfig c = quick(ExperimentKind::bias_sweep);
    c.train.learning_rate = 1e300;
    const auto rows = run_bias_sweep(c);
    CHECK(rows.size() == 12);
    for (const CellResult& r : rows) {
        CHECK_FALSE(r.ok);
        CHECK_FALSE(r.error.empty());
    }
    const auto summary = summarize(rows);
    CHECK(summary.front().failed == 2);
    CHECK(summary.front().count == 0);
}

TEST_CASE("lambda = 0 rows coincide for dan and wdan") {
    const auto rows = run_lambda_sweep(quick(ExperimentKind::lambda_sweep));
    CHECK(rows.size() == 2 * 2 * 2);
    for (std::size_t s = 0; s < 2; ++s) {
        const CellResult& dan = rows[s];
        const CellResult& wdan = rows[2 + s];
        REQUIRE(dan.arm == Arm::dan);
        REQUIRE(wdan.arm == Arm::wdan);
        CHECK(dan.seed == wdan.seed);
        CHECK(dan.accuracy == wdan.accuracy);
        CHECK(dan.loss_history == wdan.loss_history);
    }
}

TEST_CASE("with no shift and balanced priors every arm performs alike") {
    RunConfig c = RunConfig::defaults(ExperimentKind::bias_sweep);
    for (auto& s : c.mixture.domain_shift) s = {0.0, 0.0};
    c.bias_levels = {0.5};
    c.seeds = {1, 2, 3, 4, 5};
    const auto summary = summarize(run_bias_sweep(c));
    const double src = find_summary(summary, 0.5, Arm::source_only).mean;
    const double dan = find_summary(summary, 0.5, Arm::dan).mean;
    const double wdan = find_summary(summary, 0.5, Arm::wdan).mean;
    CHECK(std::abs(src - dan) <= 0.02);
    CHECK(std::abs(src - wdan) <= 0.02);
    CHECK(std::abs(dan - wdan) <= 0.02);
}

TEST_CASE("summaries") {
    std::vector<CellResult> rows(4);
    const double acc[] = {0.5, 0.7, 0.9, 0.1};
    for (std::size_t i = 0; i < 4; ++i) {
        rows[i].setting = i < 3 ? 0.5 : 0.9;
        rows[i].arm = Arm::dan;
        rows[i].ok = true;
        rows[i].accuracy = acc[i];
    }
    const auto s = summarize(rows);
    REQUIRE(s.size() == 2);
    CHECK(s[0].count == 3);
    CHECK(s[0].mean == doctest::Approx(0.7));
    CHECK(s[0].std_error == doctest::Approx(0.2 / std::sqrt(3.0)));
    CHECK(s[1].std_error == 0.0);
    CHECK(find_summary(s, 0.9, Arm::dan).mean == 0.1);
    CHECK_THROWS_AS(find_summary(s, 0.9, Arm::wdan), IndexError);
}

TEST_CASE("normalized alphas") {
    const Vector a = normalized_alphas({3.2, 0.8}, {0.5, 0.5});
    CHECK(a[0] == doctest::Approx(1.6));
    CHECK(a[1] == doctest::Approx(0.4));
    CHECK_THROWS_AS(normalized_alphas({0.0, 0.0}, {0.5, 0.5}), DegenerateWeightsError);
    CHECK_THROWS_AS(normalized_alphas({1.0}, {0.5, 0.5}), ShapeError);
}

TEST_CASE("estimator check passes on reduced settings") {
    RunConfig c = RunConfig::defaults(ExperimentKind::estimator_check);
    c.checks.fixtures = 20;
    c.checks.permutations = 100;
    c.checks.samples = 100;
    c.checks.oracle_samples = 300;
    c.checks.oracle_seeds = 3;
    const CheckReport r = run_estimator_check(c);
    CHECK(r.items.size() == 5);
    for (const CheckItem& i : r.items) CHECK_MESSAGE(i.passed, i.name << ": " << i.measured);
}

TEST_CASE("gradient check reports each term") {
    RunConfig c = RunConfig::defaults(ExperimentKind::gradient_check);
    c.checks.gradient_configs = 8;
    const CheckReport r = run_gradient_check(c);
    CHECK(r.passed());
    std::vector<std::string> names;
    for (const CheckItem& i : r.items) names.push_back(i.name);
    CHECK(names == std::vector<std::string>{"full objective", "classification terms only (lambda = 0)",
                                            "source cross-entropy", "target cross-entropy", "weighted discrepancy"});
}

TEST_CASE("run directories never overwrite") {
    const fs::path base = fresh_dir("wmmd_test_runs");
    const fs::path a = open_run_dir(base);
    const fs::path b = open_run_dir(base);
    CHECK(a.filename() == "run-001");
    CHECK(b.filename() == "run-002");
    write_json(a / "x.json", nlohmann::json{{"k", 1}});
    CHECK_THROWS_AS(write_json(a / "x.json", nlohmann::json{{"k", 2}}), DataError);
    fs::remove_all(base);
}

TEST_CASE("sweeps rerun bit-identically") {
    const fs::path base = fresh_dir("wmmd_test_sweeps");
    RunConfig c = quick(ExperimentKind::bias_sweep);
    c.output_dir = base;
    const fs::path first = run_and_write_sweep(c);
    const fs::path second = run_and_write_sweep(c);
    CHECK(first != second);
    for (const char* f : {"config.json", "cells.csv", "losses.csv", "summary.csv", "summary.json"}) {
        CHECK(fs::exists(first / f));
        CHECK(slurp(first / f) == slurp(second / f));
    }
    // The emitted config reproduces the run.
    const RunConfig again = load_run_config(first / "config.json");
    std::vector<CellResult> rows;
    const fs::path third = run_and_write_sweep(again, &rows);
    CHECK(slurp(third / "cells.csv") == slurp(first / "cells.csv"));
    CHECK(rows.size() == 12);
    fs::remove_all(base);
}

TEST_CASE("single training run on CSV files") {
    RunConfig c = RunConfig::defaults();
    c.source_csv = fs::path(WMMD_FIXTURE_DIR) / "source.csv";
    c.target_csv = fs::path(WMMD_FIXTURE_DIR) / "target.csv";
    c.train.epochs = 3;
    const SingleRun run = run_single_train(c);
    REQUIRE(run.evaluation.has_value());
    CHECK(run.evaluation->accuracy > 0.5);
    CHECK(run.state.records.size() == 3);
    CHECK(run.state.records[0].target_accuracy.has_value());
    CHECK(run.model.input_dim == 2);

    RunConfig sampled = RunConfig::defaults();
    sampled.train.epochs = 2;
    CHECK(run_single_train(sampled).evaluation.has_value());
}

TEST_CASE("sweeps refuse CSV inputs") {
    RunConfig c = quick(ExperimentKind::bias_sweep);
    c.source_csv = "a.csv";
    c.target_csv = "b.csv";
    CHECK_THROWS_AS(run_bias_sweep(c), ParameterError);
}

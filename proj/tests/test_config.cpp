#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "wmmd/config.hpp"
#include "wmmd/error.hpp"

using namespace wmmd;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST_CASE("names round-trip") {
    for (auto k : {ExperimentKind::bias_sweep, ExperimentKind::lambda_sweep, ExperimentKind::estimator_check,
                   ExperimentKind::gradient_check, ExperimentKind::single_train}) {
        CHECK(parse_experiment(to_string(k)) == k);
    }
    for (auto a : {Arm::source_only, Arm::dan, Arm::wdan}) CHECK(parse_arm(to_string(a)) == a);
    CHECK(to_string(Arm::source_only) == "src-only");
    CHECK_THROWS_AS(parse_arm("wmmd"), ParameterError);
    CHECK_THROWS_AS(parse_experiment("sweep"), ParameterError);
}

TEST_CASE("majority priors") {
    const Vector two = majority_priors(0.8, 2);
    CHECK(two[0] == 0.8);
    CHECK(two[1] == doctest::Approx(0.2));
    const Vector three = majority_priors(0.6, 3);
    CHECK(three[1] == doctest::Approx(0.2));
    CHECK(three[2] == doctest::Approx(0.2));
    CHECK_THROWS_AS(majority_priors(1.2, 2), ParameterError);
    CHECK_THROWS_AS(majority_priors(0.5, 1), ParameterError);
}

TEST_CASE("defaults describe the two-class replica") {
    const RunConfig c = RunConfig::defaults(ExperimentKind::bias_sweep);
    CHECK_NOTHROW(c.validate());
    CHECK(c.kind == ExperimentKind::bias_sweep);
    CHECK(c.seeds.size() == 10);
    CHECK(c.mixture.class_count() == 2);
    CHECK(c.model.input_dim == 2);
    CHECK(c.model.hidden_dims == std::vector<std::size_t>{64, 32});
    CHECK(c.model.tap_layers == std::vector<std::size_t>{1, 2});
    CHECK(c.bias_levels == std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9});
    CHECK(c.lambda_grid == std::vector<double>{0.0, 0.03, 0.07, 0.1, 0.4, 0.7, 1.0, 1.4, 1.7, 2.0});
    CHECK(c.train.batch_size == 64);
    CHECK(c.kernel == KernelSpec::multi_scale(1.0));
}

TEST_CASE("validation rejects inconsistent settings") {
    RunConfig c = RunConfig::defaults();
    c.seeds.clear();
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = RunConfig::defaults();
    c.model.class_count = 3;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = RunConfig::defaults();
    c.bias_levels = {1.5};
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = RunConfig::defaults();
    c.lambda_grid = {-1.0};
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = RunConfig::defaults();
    c.target_priors = {0.7, 0.7};
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = RunConfig::defaults();
    c.train.batch_size = 3;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("JSON round trip") {
    RunConfig c = RunConfig::defaults(ExperimentKind::lambda_sweep);
    c.seeds = {4, 9};
    c.arm = Arm::dan;
    c.train.gamma = 0.25;
    c.model.activation = Activation::tanh;
    c.kernel = KernelSpec({0.5, 2.0}, {0.25, 0.75});
    c.source_csv = "a.csv";
    c.target_csv = "b.csv";
    c.checks.fixtures = 7;
    const RunConfig back = from_json(to_json(c), RunConfig{});
    CHECK(to_json(back) == to_json(c));
    CHECK(back.kind == ExperimentKind::lambda_sweep);
    CHECK(back.seeds == c.seeds);
    CHECK(back.arm == Arm::dan);
    CHECK(back.train.gamma == 0.25);
    CHECK(back.model == c.model);
    CHECK(back.kernel == c.kernel);
    CHECK(back.mixture.means == c.mixture.means);
    CHECK(back.source_csv == c.source_csv);
    CHECK(back.checks.fixtures == 7);
}

TEST_CASE("partial JSON overrides only the keys present") {
    const nlohmann::json j = nlohmann::json::parse(R"({"train": {"lambda": 1.4}, "kernel": {"bandwidths": [1, 2]}})");
    const RunConfig c = from_json(j, RunConfig::defaults());
    CHECK(c.train.lambda == 1.4);
    CHECK(c.train.epochs == 30);
    CHECK(c.kernel.betas() == std::vector<double>{0.5, 0.5});

    const nlohmann::json three = nlohmann::json::parse(
        R"({"data": {"means": [[0,0,0],[3,0,0],[0,3,0]], "scales": [1,1,1], "priors": [0.3,0.3,0.4],
            "domain_shift": [[0,0,0],[0,0,0],[0,0,0]], "target_priors": [0.6,0.2,0.2]}})");
    const RunConfig d = from_json(three, RunConfig::defaults());
    CHECK(d.model.input_dim == 3);
    CHECK(d.model.class_count == 3);
    CHECK_NOTHROW(d.validate());
}

TEST_CASE("config files") {
    const auto good = write_temp("wmmd_cfg_good.json", R"({"experiment": "bias-sweep", "seeds": [3]})");
    const RunConfig c = load_run_config(good);
    CHECK(c.kind == ExperimentKind::bias_sweep);
    CHECK(c.seeds == std::vector<std::uint64_t>{3});
    CHECK(c.bias_levels.size() == 5);

    const auto broken = write_temp("wmmd_cfg_broken.json", "{\"seeds\": [1,");
    CHECK_THROWS_AS(load_run_config(broken), ParameterError);
    const auto wrong_type = write_temp("wmmd_cfg_type.json", R"({"train": {"lambda": "big"}})");
    CHECK_THROWS_AS(load_run_config(wrong_type), ParameterError);
    const auto bad_act = write_temp("wmmd_cfg_act.json", R"({"model": {"activation": "gelu"}})");
    CHECK_THROWS_AS(load_run_config(bad_act), ParameterError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), DataError);
    for (const auto& p : {good, broken, wrong_type, bad_act}) std::filesystem::remove(p);
}

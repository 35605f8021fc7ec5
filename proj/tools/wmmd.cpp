#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "wmmd/config.hpp"
#include "wmmd/error.hpp"
#include "wmmd/experiments.hpp"
#include "wmmd/model.hpp"

namespace fs = std::filesystem;
using namespace wmmd;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> seed_count;
    std::string out;
    std::optional<double> lambda;
    std::optional<double> gamma;
    std::string arm;
    std::string source_csv;
    std::string target_csv;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "seed (replaces the configured seed list)");
    cmd->add_option("--seed-count", o.seed_count, "use seeds seed, seed+1, ... (default seed 1)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "output directory; each run gets a fresh run-NNN inside it");
    cmd->add_option("--lambda", o.lambda, "regularizer weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--gamma", o.gamma, "target cross-entropy weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--arm", o.arm, "src-only, dan or wdan")->check(CLI::IsMember({"src-only", "dan", "wdan"}));
}

RunConfig resolve(ExperimentKind kind, const Overrides& o) {
    RunConfig c = o.config.empty() ? RunConfig::defaults(kind) : load_run_config(o.config);
    c.kind = kind;
    if (o.seed_count) {
        const std::uint64_t first = o.seed.value_or(1);
        c.seeds.clear();
        for (std::size_t k = 0; k < *o.seed_count; ++k) c.seeds.push_back(first + k);
    } else if (o.seed) {
        c.seeds = {*o.seed};
    }
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.lambda) c.train.lambda = *o.lambda;
    if (o.gamma) c.train.gamma = *o.gamma;
    if (!o.arm.empty()) c.arm = parse_arm(o.arm);
    if (!o.source_csv.empty()) c.source_csv = o.source_csv;
    if (!o.target_csv.empty()) c.target_csv = o.target_csv;
    c.validate();
    return c;
}

int sweep(ExperimentKind kind, const Overrides& o) {
    const RunConfig config = resolve(kind, o);
    std::vector<CellResult> rows;
    const fs::path dir = run_and_write_sweep(config, &rows);
    const auto summary = summarize(rows);
    const char* name = kind == ExperimentKind::bias_sweep ? "bias" : "lambda";
    fmt::print("{:>8} {:>9} {:>6} {:>9} {:>8}\n", name, "arm", "cells", "accuracy", "se");
    std::size_t failed = 0;
    for (const SummaryRow& s : summary) {
        fmt::print("{:>8} {:>9} {:>6} {:>9.4f} {:>8.4f}\n", s.setting, to_string(s.arm), s.count, s.mean, s.std_error);
        failed += s.failed;
    }
    if (failed > 0) fmt::print(stderr, "warning: {} cells failed; see cells.csv\n", failed);
    fmt::print("results in {}\n", dir.string());
    return 0;
}

int check(ExperimentKind kind, const Overrides& o) {
    const RunConfig config = resolve(kind, o);
    const CheckReport report =
        kind == ExperimentKind::estimator_check ? run_estimator_check(config) : run_gradient_check(config);
    const fs::path dir = open_run_dir(config.output_dir);
    write_json(dir / "config.json", to_json(config));
    write_report_csv(dir / "report.csv", report);
    write_json(dir / "report.json", report_json(report));
    for (const CheckItem& i : report.items) {
        fmt::print("{} {:<42} measured {:.3e} (threshold {:.3e})  {}\n", i.passed ? "PASS" : "FAIL", i.name,
                   i.measured, i.threshold, i.detail);
    }
    fmt::print("results in {}\n", dir.string());
    return report.passed() ? 0 : kExitCheckFailed;
}

int train_verb(const Overrides& o) {
    const RunConfig config = resolve(ExperimentKind::single_train, o);
    const SingleRun run = run_single_train(config);
    const fs::path dir = open_run_dir(config.output_dir);
    write_json(dir / "config.json", to_json(config));
    save_checkpoint(dir / "checkpoint.txt", run.model, run.state.params);

    std::ofstream epochs(dir / "epochs.csv");
    epochs << "epoch,total,source_ce,target_ce,wmmd,alphas,target_priors,target_accuracy\n";
    auto join = [](const Vector& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{}", i ? ";" : "", v[i]);
        return s;
    };
    for (const EpochRecord& r : run.state.records) {
        epochs << fmt::format("{},{},{},{},{},{},{},{}\n", r.epoch, r.terms.total, r.terms.source_ce,
                              r.terms.target_ce, r.terms.wmmd, join(r.alphas), join(r.target_priors),
                              r.target_accuracy ? fmt::format("{}", *r.target_accuracy) : "");
    }

    nlohmann::json summary = {{"arm", to_string(config.arm)},
                              {"seed", config.seeds.front()},
                              {"final_alphas", run.state.weights.alphas},
                              {"final_target_priors", run.state.weights.target_priors},
                              {"loss_history", run.state.loss_history}};
    if (run.evaluation) {
        summary["target_accuracy"] = run.evaluation->accuracy;
        summary["confusion"] = run.evaluation->confusion;
        fmt::print("target accuracy {:.4f}\n", run.evaluation->accuracy);
    }
    write_json(dir / "summary.json", summary);
    fmt::print("final alphas {}\nresults in {}\n", join(run.state.weights.alphas), dir.string());
    return 0;
}

int eval_verb(const std::string& checkpoint, const std::string& data, const std::string& out) {
    const Checkpoint ckpt = load_checkpoint(fs::path(checkpoint));
    Dataset set = load_csv(data, CsvSchema{true, ckpt.config.class_count});
    if (set.dim() != ckpt.config.input_dim) {
        throw SchemaError(fmt::format("data has {} features, model expects {}", set.dim(), ckpt.config.input_dim));
    }
    const Evaluation ev = evaluate(ckpt.config, ckpt.params, set);
    const nlohmann::json result = {{"checkpoint", checkpoint},
                                   {"data", data},
                                   {"samples", set.size()},
                                   {"accuracy", ev.accuracy},
                                   {"confusion", ev.confusion}};
    if (!out.empty()) {
        const fs::path dir = open_run_dir(out);
        write_json(dir / "eval.json", result);
    }
    std::cout << result.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted MMD domain adaptation: experiments and verification"};
    app.require_subcommand(1);

    Overrides o;
    CLI::App* bias = app.add_subcommand("bias-sweep", "accuracy of src-only, dan and wdan across target class bias");
    CLI::App* lambda = app.add_subcommand("lambda-sweep", "accuracy of dan and wdan across the lambda grid");
    CLI::App* est = app.add_subcommand("estimator-check", "reduction and Monte-Carlo checks of the estimators");
    CLI::App* grad = app.add_subcommand("grad-check", "finite-difference check of the training gradients");
    CLI::App* train = app.add_subcommand("train", "train one arm and save a checkpoint");
    for (CLI::App* cmd : {bias, lambda, est, grad, train}) add_common(cmd, o);
    train->add_option("--source-csv", o.source_csv, "labeled source samples")->check(CLI::ExistingFile);
    train->add_option("--target-csv", o.target_csv, "target samples (labels, if present, are only scored)")
        ->check(CLI::ExistingFile);

    std::string checkpoint;
    std::string data;
    std::string eval_out;
    CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a labeled CSV");
    eval->add_option("--checkpoint", checkpoint, "checkpoint written by train")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", data, "labeled CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", eval_out, "also write eval.json into a fresh run directory here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bias) return sweep(ExperimentKind::bias_sweep, o);
        if (*lambda) return sweep(ExperimentKind::lambda_sweep, o);
        if (*est) return check(ExperimentKind::estimator_check, o);
        if (*grad) return check(ExperimentKind::gradient_check, o);
        if (*train) return train_verb(o);
        if (*eval) return eval_verb(checkpoint, data, eval_out);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitError;
    }
    return kExitError;
}

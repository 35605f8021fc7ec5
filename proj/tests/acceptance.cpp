// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance [output-dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "wmmd/experiments.hpp"

using namespace wmmd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string title;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const CheckItem* find_item(const CheckReport& r, const std::string& prefix) {
    for (const CheckItem& i : r.items)
        if (i.name.rfind(prefix, 0) == 0) return &i;
    return nullptr;
}

// Estimator and gradient reports are shared by criteria 1-4.
struct Reports {
    CheckReport estimator;
    CheckReport gradient;
    double estimator_seconds = 0.0;
    double gradient_seconds = 0.0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome reduction(const Reports& r) {
    const CheckItem* i = find_item(r.estimator, "alpha-one reduction");
    if (!i) return {false, "item missing"};
    return {i->passed, fmt::format("max relative gap {:.3e} (< {:.0e}), {}", i->measured, i->threshold, i->detail)};
}

Outcome linear_agreement(const Reports& r) {
    Outcome out{true, ""};
    int found = 0;
    for (const CheckItem& i : r.estimator.items) {
        if (i.name.rfind("linear vs U-statistic", 0) != 0) continue;
        ++found;
        out.passed = out.passed && i.passed;
        out.detail += fmt::format("{}: {:.2f} SE; ", i.name, i.measured);
    }
    if (found != 3) return {false, fmt::format("expected 3 settings, found {}", found)};
    out.detail += "limit 3 SE";
    return out;
}

Outcome gradient(const Reports& r, std::size_t configs) {
    double worst = 0.0;
    for (const CheckItem& i : r.gradient.items) worst = std::max(worst, i.measured);
    return {r.gradient.passed() && configs >= 20,
            fmt::format("{} configurations, max relative error {:.3e} (< 1e-4)", configs, worst)};
}

Outcome oracle(const Reports& r) {
    const CheckItem* i = find_item(r.estimator, "oracle-alpha correction");
    if (!i) return {false, "item missing"};
    return {i->passed, fmt::format("weighted / unweighted = {:.4f} (< {:.2f}), {}", i->measured, i->threshold, i->detail)};
}

Outcome bias_trend() {
    const RunConfig c = RunConfig::defaults(ExperimentKind::bias_sweep);
    const auto summary = summarize(run_bias_sweep(c));
    const auto mean = [&](double b, Arm a) { return find_summary(summary, b, a).mean; };
    const double dan_drop = mean(0.5, Arm::dan) - mean(0.9, Arm::dan);
    const double wdan_drop = mean(0.5, Arm::wdan) - mean(0.9, Arm::wdan);
    bool ok = wdan_drop < dan_drop && c.seeds.size() >= 10;
    std::string detail = fmt::format("{} seeds; drop 0.5->0.9 dan {:.4f}, wdan {:.4f}; ", c.seeds.size(), dan_drop, wdan_drop);
    for (double b : c.bias_levels) {
        for (Arm a : {Arm::source_only, Arm::dan, Arm::wdan}) {
            const SummaryRow& s = find_summary(summary, b, a);
            if (s.failed > 0) ok = false;
        }
        detail += fmt::format("b={} dan {:.4f} wdan {:.4f}; ", b, mean(b, Arm::dan), mean(b, Arm::wdan));
        if (b >= 0.7 && mean(b, Arm::wdan) < mean(b, Arm::dan)) ok = false;
    }
    return {ok, detail};
}

Outcome lambda_trend() {
    const RunConfig c = RunConfig::defaults(ExperimentKind::lambda_sweep);
    const auto summary = summarize(run_lambda_sweep(c));
    const double base = find_summary(summary, 0.0, Arm::wdan).mean;
    double best = -1.0;
    double best_lambda = 0.0;
    for (double l : c.lambda_grid) {
        const double m = find_summary(summary, l, Arm::wdan).mean;
        if (m > best) {
            best = m;
            best_lambda = l;
        }
    }
    const double largest = *std::max_element(c.lambda_grid.begin(), c.lambda_grid.end());
    const double at_largest = find_summary(summary, largest, Arm::wdan).mean;
    const bool ok = best - base >= 0.02 && at_largest < best;
    return {ok, fmt::format("wdan lambda=0 {:.4f}, best {:.4f} at lambda={} (+{:.2f} points), lambda={} {:.4f}", base, best,
                            best_lambda, 100.0 * (best - base), largest, at_largest)};
}

Outcome alpha_recovery() {
    RunConfig c = RunConfig::defaults(ExperimentKind::bias_sweep);
    const double bias = 0.8;
    const Vector target = majority_priors(bias, 2);
    Vector truth(2);
    for (std::size_t k = 0; k < 2; ++k) truth[k] = target[k] / c.mixture.priors[k];
    std::size_t within = 0;
    double worst = 0.0;
    const std::size_t seeds = 20;
    for (std::uint64_t s = 1; s <= seeds; ++s) {
        const CellResult r = run_cell(c, target, Arm::wdan, c.train.lambda, s, bias);
        if (!r.ok) continue;
        const Vector a = normalized_alphas(r.alphas, r.source_priors);
        double gap = 0.0;
        for (std::size_t k = 0; k < 2; ++k) gap = std::max(gap, std::abs(a[k] - truth[k]));
        worst = std::max(worst, gap);
        if (gap <= 0.15) ++within;
    }
    const bool ok = within * 5 >= seeds * 4;
    return {ok, fmt::format("{}/{} seeds within 0.15 of ({:.2f}, {:.2f}), worst gap {:.4f}", within, seeds, truth[0], truth[1], worst)};
}

Outcome determinism(const fs::path& out) {
    const char* files[] = {"config.json", "cells.csv", "losses.csv", "summary.csv", "summary.json"};
    std::string detail;
    bool ok = true;

    RunConfig bias = RunConfig::defaults(ExperimentKind::bias_sweep);
    bias.seeds = {1, 2};
    bias.bias_levels = {0.5, 0.9};
    bias.train.epochs = 5;
    RunConfig lambda = RunConfig::defaults(ExperimentKind::lambda_sweep);
    lambda.seeds = {3};
    lambda.lambda_grid = {0.0, 1.0};
    lambda.train.epochs = 5;

    for (RunConfig* c : {&bias, &lambda}) {
        c->output_dir = out;
        std::vector<CellResult> first;
        std::vector<CellResult> second;
        const fs::path a = run_and_write_sweep(*c, &first);
        const fs::path b = run_and_write_sweep(*c, &second);
        bool same = first.size() == second.size();
        for (std::size_t i = 0; same && i < first.size(); ++i) {
            same = first[i].loss_history == second[i].loss_history && first[i].accuracy == second[i].accuracy &&
                   first[i].alphas == second[i].alphas;
        }
        for (const char* f : files) same = same && slurp(a / f) == slurp(b / f) && !slurp(a / f).empty();
        ok = ok && same;
        detail += fmt::format("{}: {} vs {} {}; ", to_string(c->kind), a.filename().string(), b.filename().string(),
                              same ? "identical" : "DIFFER");
    }

    RunConfig checks = RunConfig::defaults(ExperimentKind::gradient_check);
    checks.checks.gradient_configs = 4;
    const bool reports_same = report_json(run_gradient_check(checks)).dump() == report_json(run_gradient_check(checks)).dump();
    ok = ok && reports_same;
    detail += fmt::format("gradient-check report {}", reports_same ? "identical" : "DIFFER");
    return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "wmmd-acceptance";
    fs::create_directories(out);

    Reports reports;
    const RunConfig est_config = RunConfig::defaults(ExperimentKind::estimator_check);
    const RunConfig grad_config = RunConfig::defaults(ExperimentKind::gradient_check);
    auto t0 = std::chrono::steady_clock::now();
    reports.estimator = run_estimator_check(est_config);
    reports.estimator_seconds = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    reports.gradient = run_gradient_check(grad_config);
    reports.gradient_seconds = seconds_since(t0);

    // Criteria 1, 2 and 4 share one estimator-check run; its total time is
    // charged against each of their budgets.
    const std::vector<Criterion> criteria = {
        {1, "alpha-one reduction", 60, [&] { return reduction(reports); }},
        {2, "linear estimator agrees with U-statistic", 120, [&] { return linear_agreement(reports); }},
        {3, "gradient fidelity", 120, [&] { return gradient(reports, grad_config.checks.gradient_configs); }},
        {4, "oracle-alpha correction", 120, [&] { return oracle(reports); }},
        {5, "bias-robustness trend", 900, bias_trend},
        {6, "lambda-sweep trend", 900, lambda_trend},
        {7, "alpha recovery", 600, alpha_recovery},
        {8, "determinism", 0, [&] { return determinism(out); }},
    };

    bool all = true;
    for (const Criterion& c : criteria) {
        t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        double elapsed = seconds_since(t0);
        if (c.number == 3) elapsed += reports.gradient_seconds;
        if (c.number == 1 || c.number == 2 || c.number == 4) elapsed += reports.estimator_seconds;
        const bool in_time = c.budget_seconds <= 0 || elapsed < c.budget_seconds;
        const bool passed = o.passed && in_time;
        all = all && passed;
        std::string budget = c.budget_seconds > 0 ? fmt::format(" / {:.0f}s", c.budget_seconds) : "";
        fmt::print("{} criterion {}: {} [{:.1f}s{}] {}\n", passed ? "PASS" : "FAIL", c.number, c.title, elapsed, budget,
                   o.detail);
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}

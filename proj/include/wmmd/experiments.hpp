#pragma once

// Experiment harness: training sweeps, verification suites and run output.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "wmmd/cem.hpp"
#include "wmmd/config.hpp"
#include "wmmd/data.hpp"

namespace wmmd {

// Training settings for one arm: src-only drops both adaptation terms, dan
// pins alphas at 1, wdan estimates them.
TrainConfig arm_config(const TrainConfig& base, Arm arm);

// Seeds derived from a sweep seed for data sampling and for training.
std::uint64_t data_seed(std::uint64_t seed);
std::uint64_t train_seed(std::uint64_t seed);

struct CellResult {
    double setting = 0.0;  // bias level or lambda
    Arm arm = Arm::wdan;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double accuracy = 0.0;
    Vector alphas;         // final alphas
    Vector source_priors;  // empirical source priors used by the C-step
    std::vector<double> loss_history;
};

// Samples a pair with the given target priors and trains one arm on it.
// Errors are caught and recorded in the result.
CellResult run_cell(const RunConfig& config, const Vector& target_priors, Arm arm, double lambda,
                    std::uint64_t seed, double setting);

// Rows ordered by bias level, then arm (src-only, dan, wdan), then seed.
std::vector<CellResult> run_bias_sweep(const RunConfig& config);

// Rows ordered by lambda, then arm (dan, wdan), then seed, on the pair with
// config.target_priors.
std::vector<CellResult> run_lambda_sweep(const RunConfig& config);

struct SummaryRow {
    double setting = 0.0;
    Arm arm = Arm::wdan;
    std::size_t count = 0;  // successful cells
    std::size_t failed = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

// Mean accuracy and standard error per (setting, arm), in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<CellResult>& rows);
const SummaryRow& find_summary(const std::vector<SummaryRow>& summary, double setting, Arm arm);

// Alphas rescaled so that sum_c source_prior_c * alpha_c = 1.
Vector normalized_alphas(const Vector& alphas, const Vector& source_priors);

struct CheckItem {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct CheckReport {
    std::vector<CheckItem> items;
    bool passed() const;
};

// alpha = 1 reduction, linear-vs-U-statistic agreement and oracle-alpha correction.
CheckReport run_estimator_check(const RunConfig& config);

// Finite-difference check of the training-objective gradients over random
// small models, with a per-term breakdown.
CheckReport run_gradient_check(const RunConfig& config);

// Creates base/run-NNN with the next unused number.
std::filesystem::path open_run_dir(const std::filesystem::path& base);

void write_cells_csv(const std::filesystem::path& path, const std::vector<CellResult>& rows,
                     const std::string& setting_name);
void write_losses_csv(const std::filesystem::path& path, const std::vector<CellResult>& rows,
                      const std::string& setting_name);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& summary,
                       const std::string& setting_name);
nlohmann::json summary_json(const std::vector<SummaryRow>& summary, const std::string& setting_name);
nlohmann::json report_json(const CheckReport& report);
void write_report_csv(const std::filesystem::path& path, const CheckReport& report);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Full sweep: runs it, writes config.json, cells.csv, losses.csv, summary.csv
// and summary.json into a fresh run directory and returns that directory.
std::filesystem::path run_and_write_sweep(const RunConfig& config, std::vector<CellResult>* rows = nullptr);

struct SingleRun {
    ModelConfig model;
    TrainState state;
    std::optional<Evaluation> evaluation;
};

// Trains config.arm with config.seeds.front(), on the CSV files when both
// are set and on a sampled pair otherwise.
SingleRun run_single_train(const RunConfig& config);

}  // namespace wmmd

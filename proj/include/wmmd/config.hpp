#pragma once

// Run configuration for the experiment harness, stored as JSON.
//
// {
//   "experiment": "bias-sweep" | "lambda-sweep" | "estimator-check" | "gradient-check" | "single-train",
//   "seeds": [1, 2, ...],
//   "output_dir": "runs",
//   "arm": "src-only" | "dan" | "wdan",
//   "data": {
//     "means": [[-2.5, 0], [2.5, 0]], "scales": [1, 1], "priors": [0.5, 0.5],
//     "domain_shift": [[1, 2], [1, 2]],
//     "n_source": 400, "n_target": 400,
//     "target_priors": [0.8, 0.2],
//     "source_csv": "...", "target_csv": "..."          (optional, replace sampling)
//   },
//   "model": {"hidden_dims": [64, 32], "tap_layers": [1, 2], "activation": "relu"},
//   "train": {"lambda": 0.4, "gamma": 0, "batch_size": 64, "epochs": 30, "learning_rate": 0.01,
//             "momentum": 0.9, "alpha_smoothing": 0.001, "refresh_bandwidth": true},
//   "kernel": {"bandwidths": [0.25, 0.5, 1, 2, 4], "betas": [0.2, 0.2, 0.2, 0.2, 0.2]},
//   "bias_levels": [0.5, 0.6, 0.7, 0.8, 0.9],
//   "lambda_grid": [0, 0.03, 0.07, 0.1, 0.4, 0.7, 1, 1.4, 1.7, 2],
//   "checks": {"fixtures": 100, "permutations": 200, "samples": 200, "oracle_samples": 2000,
//              "oracle_seeds": 20, "gradient_configs": 20}
// }
//
// Every key is optional; missing keys keep the defaults below.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wmmd/cem.hpp"
#include "wmmd/data.hpp"
#include "wmmd/kernels.hpp"
#include "wmmd/model.hpp"

namespace wmmd {

enum class ExperimentKind { bias_sweep, lambda_sweep, estimator_check, gradient_check, single_train };

// src-only: no regularizer, no target loss. dan: alphas pinned at 1. wdan: alphas estimated.
enum class Arm { source_only, dan, wdan };

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(Arm arm);
ExperimentKind parse_experiment(std::string_view name);
Arm parse_arm(std::string_view name);

struct CheckSettings {
    std::size_t fixtures = 100;
    std::size_t permutations = 200;
    std::size_t samples = 200;
    std::size_t oracle_samples = 2000;
    std::size_t oracle_seeds = 20;
    std::size_t gradient_configs = 20;
};

struct RunConfig {
    ExperimentKind kind = ExperimentKind::single_train;
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path output_dir = "runs";
    Arm arm = Arm::wdan;

    MixtureSpec mixture;
    std::size_t n_source = 400;
    std::size_t n_target = 400;
    Vector target_priors;
    std::optional<std::filesystem::path> source_csv;
    std::optional<std::filesystem::path> target_csv;

    ModelConfig model;
    TrainConfig train;
    // Bandwidth multipliers (or absolute bandwidths when refresh is off) and betas.
    KernelSpec kernel = KernelSpec::multi_scale(1.0);

    std::vector<double> bias_levels{0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> lambda_grid{0.0, 0.03, 0.07, 0.1, 0.4, 0.7, 1.0, 1.4, 1.7, 2.0};
    CheckSettings checks;

    // Two-class replica of the class-weight-bias study: classes at (-2.5, 0)
    // and (2.5, 0), unit scale, target shifted by (1, 2), balanced source.
    static RunConfig defaults(ExperimentKind kind = ExperimentKind::single_train);

    // Throws ParameterError on inconsistent settings.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
// Keys present in `j` override the matching fields of `base`.
RunConfig from_json(const nlohmann::json& j, RunConfig base);
RunConfig load_run_config(const std::filesystem::path& path);

// Priors with weight `majority` on class 0 and the rest split evenly.
Vector majority_priors(double majority, std::size_t class_count);

}  // namespace wmmd

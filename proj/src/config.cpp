#include "wmmd/config.hpp"

#include <cmath>
#include <fstream>

#include <fmt/core.h>

#include "wmmd/error.hpp"

namespace wmmd {

using nlohmann::json;

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::bias_sweep: return "bias-sweep";
        case ExperimentKind::lambda_sweep: return "lambda-sweep";
        case ExperimentKind::estimator_check: return "estimator-check";
        case ExperimentKind::gradient_check: return "gradient-check";
        case ExperimentKind::single_train: return "single-train";
    }
    return "unknown";
}

std::string_view to_string(Arm arm) {
    switch (arm) {
        case Arm::source_only: return "src-only";
        case Arm::dan: return "dan";
        case Arm::wdan: return "wdan";
    }
    return "unknown";
}

ExperimentKind parse_experiment(std::string_view name) {
    for (auto k : {ExperimentKind::bias_sweep, ExperimentKind::lambda_sweep, ExperimentKind::estimator_check,
                   ExperimentKind::gradient_check, ExperimentKind::single_train}) {
        if (name == to_string(k)) return k;
    }
    throw ParameterError(fmt::format("unknown experiment '{}'", name));
}

Arm parse_arm(std::string_view name) {
    for (auto a : {Arm::source_only, Arm::dan, Arm::wdan}) {
        if (name == to_string(a)) return a;
    }
    throw ParameterError(fmt::format("unknown arm '{}' (expected src-only, dan or wdan)", name));
}

Vector majority_priors(double majority, std::size_t class_count) {
    if (class_count < 2) throw ParameterError("need at least two classes");
    if (!(majority >= 0.0 && majority <= 1.0)) throw ParameterError(fmt::format("bias level {} outside [0, 1]", majority));
    Vector p(class_count, (1.0 - majority) / static_cast<double>(class_count - 1));
    p[0] = majority;
    return p;
}

RunConfig RunConfig::defaults(ExperimentKind kind) {
    RunConfig c;
    c.kind = kind;
    c.mixture.means = {{-2.5, 0.0}, {2.5, 0.0}};
    c.mixture.scales = {1.0, 1.0};
    c.mixture.priors = {0.5, 0.5};
    c.mixture.domain_shift = {{1.0, 2.0}, {1.0, 2.0}};
    c.target_priors = {0.8, 0.2};
    c.model.input_dim = 2;
    c.model.class_count = 2;
    c.model.hidden_dims = {64, 32};
    c.model.normalize();
    c.train.lambda = 0.4;
    c.train.gamma = 0.0;
    c.train.batch_size = 64;
    c.train.epochs = 30;
    c.train.learning_rate = 0.01;
    c.train.momentum = 0.9;
    c.train.alpha_smoothing = 1e-3;
    if (kind == ExperimentKind::bias_sweep || kind == ExperimentKind::lambda_sweep) {
        c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    }
    return c;
}

void RunConfig::validate() const {
    if (seeds.empty()) throw ParameterError("seed list is empty");
    if (!source_csv || !target_csv) {
        mixture.validate();
        if (mixture.class_count() != model.class_count) {
            throw ParameterError(fmt::format("mixture has {} classes, model {}", mixture.class_count(),
                                             model.class_count));
        }
        if (mixture.dim() != model.input_dim) {
            throw ParameterError(fmt::format("mixture dimension {} vs model input {}", mixture.dim(), model.input_dim));
        }
        if (n_source < 2 || n_target < 2) throw ParameterError("need at least 2 samples per domain");
    }
    if (!target_priors.empty()) mixture.with_priors(target_priors);
    train.validate();
    for (double b : bias_levels) majority_priors(b, model.class_count);
    for (double l : lambda_grid) {
        if (!(l >= 0.0)) throw ParameterError(fmt::format("lambda {} is negative", l));
    }
    ModelConfig m = model;
    m.normalize();
}

// ---- JSON ----

json to_json(const RunConfig& c) {
    json data = {
        {"means", c.mixture.means},
        {"scales", c.mixture.scales},
        {"priors", c.mixture.priors},
        {"domain_shift", c.mixture.domain_shift},
        {"n_source", c.n_source},
        {"n_target", c.n_target},
        {"target_priors", c.target_priors},
    };
    if (c.source_csv) data["source_csv"] = c.source_csv->string();
    if (c.target_csv) data["target_csv"] = c.target_csv->string();
    return json{
        {"experiment", to_string(c.kind)},
        {"seeds", c.seeds},
        {"output_dir", c.output_dir.string()},
        {"arm", to_string(c.arm)},
        {"data", std::move(data)},
        {"model",
         {{"hidden_dims", c.model.hidden_dims},
          {"tap_layers", c.model.tap_layers},
          {"activation", c.model.activation == Activation::relu ? "relu" : "tanh"}}},
        {"train",
         {{"lambda", c.train.lambda},
          {"gamma", c.train.gamma},
          {"batch_size", c.train.batch_size},
          {"epochs", c.train.epochs},
          {"learning_rate", c.train.learning_rate},
          {"momentum", c.train.momentum},
          {"alpha_smoothing", c.train.alpha_smoothing},
          {"refresh_bandwidth", c.train.refresh_bandwidth}}},
        {"kernel", {{"bandwidths", c.kernel.bandwidths()}, {"betas", c.kernel.betas()}}},
        {"bias_levels", c.bias_levels},
        {"lambda_grid", c.lambda_grid},
        {"checks",
         {{"fixtures", c.checks.fixtures},
          {"permutations", c.checks.permutations},
          {"samples", c.checks.samples},
          {"oracle_samples", c.checks.oracle_samples},
          {"oracle_seeds", c.checks.oracle_seeds},
          {"gradient_configs", c.checks.gradient_configs}}},
    };
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig from_json(const json& j, RunConfig c) {
    try {
        if (j.contains("experiment")) c.kind = parse_experiment(j.at("experiment").get<std::string>());
        read(j, "seeds", c.seeds);
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("arm")) c.arm = parse_arm(j.at("arm").get<std::string>());

        if (j.contains("data")) {
            const json& d = j.at("data");
            read(d, "means", c.mixture.means);
            read(d, "scales", c.mixture.scales);
            read(d, "priors", c.mixture.priors);
            read(d, "domain_shift", c.mixture.domain_shift);
            read(d, "n_source", c.n_source);
            read(d, "n_target", c.n_target);
            read(d, "target_priors", c.target_priors);
            if (d.contains("source_csv")) c.source_csv = d.at("source_csv").get<std::string>();
            if (d.contains("target_csv")) c.target_csv = d.at("target_csv").get<std::string>();
            if (d.contains("means")) {
                c.model.input_dim = c.mixture.dim();
                c.model.class_count = c.mixture.class_count();
            }
        }
        if (j.contains("model")) {
            const json& m = j.at("model");
            read(m, "hidden_dims", c.model.hidden_dims);
            if (m.contains("hidden_dims")) c.model.tap_layers.clear();
            read(m, "tap_layers", c.model.tap_layers);
            if (m.contains("activation")) {
                const auto act = m.at("activation").get<std::string>();
                if (act == "relu") {
                    c.model.activation = Activation::relu;
                } else if (act == "tanh") {
                    c.model.activation = Activation::tanh;
                } else {
                    throw ParameterError("unknown activation '" + act + "'");
                }
            }
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            read(t, "lambda", c.train.lambda);
            read(t, "gamma", c.train.gamma);
            read(t, "batch_size", c.train.batch_size);
            read(t, "epochs", c.train.epochs);
            read(t, "learning_rate", c.train.learning_rate);
            read(t, "momentum", c.train.momentum);
            read(t, "alpha_smoothing", c.train.alpha_smoothing);
            read(t, "refresh_bandwidth", c.train.refresh_bandwidth);
        }
        if (j.contains("kernel")) {
            const json& k = j.at("kernel");
            std::vector<double> bw = c.kernel.bandwidths();
            std::vector<double> betas = c.kernel.betas();
            read(k, "bandwidths", bw);
            read(k, "betas", betas);
            if (k.contains("bandwidths") && !k.contains("betas")) {
                betas.assign(bw.size(), 1.0 / static_cast<double>(bw.size()));
            }
            c.kernel = KernelSpec(std::move(bw), std::move(betas));
        }
        read(j, "bias_levels", c.bias_levels);
        read(j, "lambda_grid", c.lambda_grid);
        if (j.contains("checks")) {
            const json& k = j.at("checks");
            read(k, "fixtures", c.checks.fixtures);
            read(k, "permutations", c.checks.permutations);
            read(k, "samples", c.checks.samples);
            read(k, "oracle_samples", c.checks.oracle_samples);
            read(k, "oracle_seeds", c.checks.oracle_seeds);
            read(k, "gradient_configs", c.checks.gradient_configs);
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    c.model.normalize();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParameterError(fmt::format("{}: {}", path.string(), e.what()));
    }
    RunConfig base = RunConfig::defaults(
        j.contains("experiment") ? parse_experiment(j.at("experiment").get<std::string>()) : ExperimentKind::single_train);
    return from_json(j, std::move(base));
}

}  // namespace wmmd

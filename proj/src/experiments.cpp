#include "wmmd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/core.h>

#include "wmmd/error.hpp"
#include "wmmd/mmd.hpp"

namespace wmmd {

using nlohmann::json;

TrainConfig arm_config(const TrainConfig& base, Arm arm) {
    TrainConfig tc = base;
    switch (arm) {
        case Arm::source_only:
            tc.lambda = 0.0;
            tc.gamma = 0.0;
            tc.estimate_alpha = false;
            break;
        case Arm::dan: tc.estimate_alpha = false; break;
        case Arm::wdan: tc.estimate_alpha = true; break;
    }
    return tc;
}

std::uint64_t data_seed(std::uint64_t seed) { return mix_seed(seed, 101); }
std::uint64_t train_seed(std::uint64_t seed) { return mix_seed(seed, 202); }

namespace {

ModelConfig model_for(const RunConfig& config, std::size_t input_dim, std::size_t class_count) {
    ModelConfig mc = config.model;
    mc.input_dim = input_dim;
    mc.class_count = class_count;
    mc.normalize();
    return mc;
}

void require_mixture(const RunConfig& config) {
    if (config.source_csv || config.target_csv) {
        throw ParameterError("sweeps sample from the configured mixture; remove source_csv/target_csv");
    }
}

Vector sweep_target_priors(const RunConfig& config) {
    return config.target_priors.empty() ? majority_priors(0.8, config.mixture.class_count()) : config.target_priors;
}

}  // namespace

CellResult run_cell(const RunConfig& config, const Vector& target_priors, Arm arm, double lambda, std::uint64_t seed,
                    double setting) {
    CellResult out;
    out.setting = setting;
    out.arm = arm;
    out.seed = seed;
    try {
        const DomainPair pair =
            make_bias_pair(config.mixture, target_priors, config.n_source, config.n_target, data_seed(seed));
        TrainConfig base = config.train;
        base.lambda = lambda;
        base.seed = train_seed(seed);
        const TrainConfig tc = arm_config(base, arm);
        const ModelConfig mc = model_for(config, config.mixture.dim(), config.mixture.class_count());
        TrainState state = train(pair.source, pair.target.features(), mc, tc, config.kernel);
        out.accuracy = evaluate(mc, state.params, pair.target.evaluation_view()).accuracy;
        out.alphas = state.weights.alphas;
        out.source_priors = state.weights.source_priors;
        out.loss_history = std::move(state.loss_history);
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

std::vector<CellResult> run_bias_sweep(const RunConfig& config) {
    config.validate();
    require_mixture(config);
    std::vector<CellResult> rows;
    for (double bias : config.bias_levels) {
        const Vector priors = majority_priors(bias, config.mixture.class_count());
        for (Arm arm : {Arm::source_only, Arm::dan, Arm::wdan}) {
            for (std::uint64_t seed : config.seeds) {
                rows.push_back(run_cell(config, priors, arm, config.train.lambda, seed, bias));
            }
        }
    }
    return rows;
}

std::vector<CellResult> run_lambda_sweep(const RunConfig& config) {
    config.validate();
    require_mixture(config);
    const Vector priors = sweep_target_priors(config);
    std::vector<CellResult> rows;
    for (double lambda : config.lambda_grid) {
        for (Arm arm : {Arm::dan, Arm::wdan}) {
            for (std::uint64_t seed : config.seeds) rows.push_back(run_cell(config, priors, arm, lambda, seed, lambda));
        }
    }
    return rows;
}

std::vector<SummaryRow> summarize(const std::vector<CellResult>& rows) {
    std::vector<SummaryRow> out;
    std::vector<std::vector<double>> values;
    for (const CellResult& r : rows) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const SummaryRow& s) { return s.setting == r.setting && s.arm == r.arm; });
        if (it == out.end()) {
            out.push_back(SummaryRow{r.setting, r.arm, 0, 0, 0.0, 0.0});
            values.emplace_back();
            it = out.end() - 1;
        }
        const auto k = static_cast<std::size_t>(it - out.begin());
        if (r.ok) {
            values[k].push_back(r.accuracy);
        } else {
            ++it->failed;
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        const auto& v = values[k];
        out[k].count = v.size();
        if (v.empty()) continue;
        const double n = static_cast<double>(v.size());
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        out[k].mean = mean;
        out[k].std_error = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    }
    return out;
}

const SummaryRow& find_summary(const std::vector<SummaryRow>& summary, double setting, Arm arm) {
    for (const SummaryRow& s : summary) {
        if (s.setting == setting && s.arm == arm) return s;
    }
    throw IndexError(fmt::format("no summary row for {} / {}", setting, to_string(arm)));
}

Vector normalized_alphas(const Vector& alphas, const Vector& source_priors) {
    if (alphas.size() != source_priors.size()) throw ShapeError("alphas and source priors differ in length");
    double z = 0.0;
    for (std::size_t c = 0; c < alphas.size(); ++c) z += source_priors[c] * alphas[c];
    if (!(z > 0.0)) throw DegenerateWeightsError("alphas have zero source-weighted mass");
    Vector out = alphas;
    for (double& a : out) a /= z;
    return out;
}

bool CheckReport::passed() const {
    return std::all_of(items.begin(), items.end(), [](const CheckItem& i) { return i.passed; });
}

// ---- estimator check ----

namespace {

double relative_gap(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, double shift, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = normal(rng) + shift;
    return m;
}

Matrix stack(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() + b.rows(), a.cols());
    std::copy(a.values().begin(), a.values().end(), out.values().begin());
    std::copy(b.values().begin(), b.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

CheckItem reduction_check(const RunConfig& config) {
    std::mt19937_64 rng(mix_seed(config.seeds.front(), 11));
    std::uniform_int_distribution<std::size_t> rows(2, 30);
    std::uniform_int_distribution<std::size_t> dims(1, 4);
    std::uniform_int_distribution<std::size_t> classes(2, 4);
    std::uniform_real_distribution<double> bandwidth(0.5, 2.0);
    double worst = 0.0;
    for (std::size_t f = 0; f < config.checks.fixtures; ++f) {
        const std::size_t d = dims(rng);
        const std::size_t c = classes(rng);
        const Matrix src = random_matrix(rows(rng), d, 0.0, rng);
        const Matrix tgt = random_matrix(rows(rng), d, 0.5, rng);
        Labels ys(src.rows());
        std::uniform_int_distribution<std::size_t> label(0, c - 1);
        for (auto& y : ys) y = label(rng);
        const KernelSpec spec = KernelSpec::multi_scale(bandwidth(rng));
        const AuxWeights ones = AuxWeights::uniform(c);
        worst = std::max(worst, relative_gap(wmmd2_quadratic(src, ys, tgt, ones, spec), mmd2_quadratic(src, tgt, spec)));
        worst = std::max(worst, relative_gap(wmmd2_linear(src, ys, tgt, ones, spec), mmd2_linear(src, tgt, spec)));
    }
    CheckItem item;
    item.name = "alpha-one reduction";
    item.measured = worst;
    item.threshold = 1e-12;
    item.passed = worst < item.threshold;
    item.detail = fmt::format("{} fixtures, quadratic and linear, max relative gap", config.checks.fixtures);
    return item;
}

struct LinearSetting {
    const char* name;
    Vector target_priors;
    bool shifted;
};

CheckItem linear_check(const RunConfig& config, const LinearSetting& setting, std::uint64_t stream) {
    MixtureSpec base = config.mixture;
    if (!setting.shifted) {
        for (auto& s : base.domain_shift) std::fill(s.begin(), s.end(), 0.0);
    }
    const std::uint64_t seed = mix_seed(config.seeds.front(), stream);
    const Dataset src = sample_mixture(base, config.checks.samples, mix_seed(seed, 0), Domain::source);
    const Dataset tgt = sample_mixture(base.with_priors(setting.target_priors), config.checks.samples,
                                       mix_seed(seed, 1), Domain::target);
    const KernelSpec spec = config.kernel.scaled(median_heuristic(stack(src.features, tgt.features)));
    const double u_stat = mmd2_unbiased(src.features, tgt.features, spec);

    std::mt19937_64 rng(mix_seed(seed, 2));
    std::vector<std::size_t> si(src.size());
    std::vector<std::size_t> ti(tgt.size());
    std::iota(si.begin(), si.end(), std::size_t{0});
    std::iota(ti.begin(), ti.end(), std::size_t{0});
    std::vector<double> draws;
    for (std::size_t p = 0; p < config.checks.permutations; ++p) {
        std::shuffle(si.begin(), si.end(), rng);
        std::shuffle(ti.begin(), ti.end(), rng);
        draws.push_back(mmd2_linear(src.features.gather_rows(si), tgt.features.gather_rows(ti), spec));
    }
    const double n = static_cast<double>(draws.size());
    const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : draws) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / (n - 1.0) / n);

    CheckItem item;
    item.name = fmt::format("linear vs U-statistic ({})", setting.name);
    item.measured = se > 0.0 ? std::abs(mean - u_stat) / se : 0.0;
    item.threshold = 3.0;
    item.passed = std::abs(mean - u_stat) <= 3.0 * se;
    item.detail = fmt::format("linear mean {:.6g}, U-statistic {:.6g}, SE {:.3g}, measured in SE units", mean,
                              u_stat, se);
    return item;
}

CheckItem oracle_check(const RunConfig& config) {
    MixtureSpec base = config.mixture;
    for (auto& s : base.domain_shift) std::fill(s.begin(), s.end(), 0.0);
    const Vector target_priors = sweep_target_priors(config);
    const AuxWeights oracle = AuxWeights::from_priors(base.priors, target_priors);
    const std::size_t n = config.checks.oracle_samples;
    double ratio_sum = 0.0;
    for (std::size_t s = 0; s < config.checks.oracle_seeds; ++s) {
        const DomainPair pair = make_bias_pair(base, target_priors, n, n, mix_seed(config.seeds.front(), 1000 + s));
        const Matrix& xt = pair.target.features();
        const KernelSpec spec = config.kernel.scaled(median_heuristic(stack(pair.source.features, xt)));
        const double plain = mmd2_quadratic(pair.source.features, xt, spec);
        const double weighted = wmmd2_quadratic(pair.source.features, pair.source.labels, xt, oracle, spec);
        ratio_sum += weighted / plain;
    }
    CheckItem item;
    item.name = "oracle-alpha correction";
    item.measured = ratio_sum / static_cast<double>(config.checks.oracle_seeds);
    item.threshold = 0.25;
    item.passed = item.measured < item.threshold;
    item.detail = fmt::format("mean weighted/plain ratio at n = {} over {} seeds", n, config.checks.oracle_seeds);
    return item;
}

}  // namespace

CheckReport run_estimator_check(const RunConfig& config) {
    config.validate();
    CheckReport report;
    report.items.push_back(reduction_check(config));
    const Vector balanced = config.mixture.priors;
    const LinearSetting settings[] = {
        {"same distribution", balanced, false},
        {"mean shift", balanced, true},
        {"prior shift", sweep_target_priors(config), false},
    };
    std::uint64_t stream = 21;
    for (const LinearSetting& s : settings) report.items.push_back(linear_check(config, s, stream++));
    report.items.push_back(oracle_check(config));
    return report;
}

// ---- gradient check ----

namespace {

constexpr double kFiniteStep = 1e-5;
constexpr double kGradTolerance = 1e-4;
// Tensors whose analytic and numeric norms sum below this compare as equal.
constexpr double kGradNormFloor = 1e-8;

struct GradCase {
    ModelConfig model;
    ModelParams params;
    Matrix xs;
    Matrix xt;
    Labels ys;
    Labels yt;
    Objective objective;
};

GradCase random_case(std::size_t index, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 500 + index));
    std::uniform_int_distribution<std::size_t> dim(2, 4);
    std::uniform_int_distribution<std::size_t> width(3, 6);
    std::uniform_int_distribution<std::size_t> depth(1, 2);
    std::uniform_int_distribution<std::size_t> classes(2, 3);
    std::uniform_int_distribution<std::size_t> half_batch(2, 5);
    std::uniform_real_distribution<double> unit(0.1, 1.0);

    GradCase g;
    g.model.input_dim = dim(rng);
    g.model.hidden_dims.clear();
    for (std::size_t l = depth(rng); l > 0; --l) g.model.hidden_dims.push_back(width(rng));
    g.model.class_count = classes(rng);
    g.model.activation = index % 2 == 0 ? Activation::tanh : Activation::relu;
    g.model.normalize();
    g.params = ModelParams::glorot(g.model, mix_seed(seed, 600 + index));
    for (Matrix& b : g.params.biases) {
        for (double& v : b.values()) v = 0.1 * (unit(rng) - 0.5);
    }

    g.xs = random_matrix(2 * half_batch(rng), g.model.input_dim, 0.0, rng);
    g.xt = random_matrix(2 * half_batch(rng), g.model.input_dim, 0.7, rng);
    std::uniform_int_distribution<std::size_t> label(0, g.model.class_count - 1);
    g.ys.resize(g.xs.rows());
    g.yt.resize(g.xt.rows());
    for (auto& y : g.ys) y = label(rng);
    for (auto& y : g.yt) y = label(rng);

    Vector sp(g.model.class_count);
    Vector tp(g.model.class_count);
    for (auto& p : sp) p = unit(rng);
    for (auto& p : tp) p = unit(rng);
    const double ssum = std::accumulate(sp.begin(), sp.end(), 0.0);
    const double tsum = std::accumulate(tp.begin(), tp.end(), 0.0);
    for (auto& p : sp) p /= ssum;
    for (auto& p : tp) p /= tsum;
    g.objective.weights = AuxWeights::from_priors(sp, tp);
    g.objective.lambda = (index / 2) % 2 == 0 ? 0.4 : 0.0;
    g.objective.gamma = (index / 4) % 2 == 0 ? 0.3 : 0.0;
    g.objective.kernels = {KernelSpec::multi_scale(0.5 + unit(rng))};
    return g;
}

enum class Term { total, source_ce, target_ce, wmmd };

double term_value(const LossTerms& t, Term term) {
    switch (term) {
        case Term::total: return t.total;
        case Term::source_ce: return t.source_ce;
        case Term::target_ce: return t.target_ce;
        case Term::wmmd: return t.wmmd;
    }
    return 0.0;
}

Gradients numeric_gradients(const GradCase& g, const Objective& objective, Term term) {
    ModelParams p = g.params;
    Gradients out = p.zero_gradients();
    auto f = [&] { return term_value(loss(g.model, p, {g.xs, g.ys}, {g.xt, g.yt}, objective), term); };
    auto sweep = [&](std::vector<Matrix>& params, std::vector<Matrix>& grads) {
        for (std::size_t l = 0; l < params.size(); ++l) {
            auto pv = params[l].values();
            auto gv = grads[l].values();
            for (std::size_t i = 0; i < pv.size(); ++i) {
                const double saved = pv[i];
                pv[i] = saved + kFiniteStep;
                const double up = f();
                pv[i] = saved - kFiniteStep;
                const double down = f();
                pv[i] = saved;
                gv[i] = (up - down) / (2.0 * kFiniteStep);
            }
        }
    };
    sweep(p.weights, out.weights);
    sweep(p.biases, out.biases);
    return out;
}

Gradients analytic_gradients(const GradCase& g, const Objective& objective) {
    return loss_and_gradients(g.model, g.params, {g.xs, g.ys}, {g.xt, g.yt}, objective).grads;
}

Gradients difference(Gradients a, const Gradients& b) {
    Gradients neg = b;
    neg *= -1.0;
    a += neg;
    return a;
}

double tensor_error(const Matrix& a, const Matrix& n) {
    double diff = 0.0;
    double na = 0.0;
    double nn = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a.values()[i] - n.values()[i]) * (a.values()[i] - n.values()[i]);
        na += a.values()[i] * a.values()[i];
        nn += n.values()[i] * n.values()[i];
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    return denom < kGradNormFloor ? 0.0 : std::sqrt(diff) / denom;
}

double max_error(const Gradients& a, const Gradients& n) {
    double worst = 0.0;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        worst = std::max(worst, tensor_error(a.weights[l], n.weights[l]));
        worst = std::max(worst, tensor_error(a.biases[l], n.biases[l]));
    }
    return worst;
}

CheckItem grad_item(std::string name, double worst, std::string detail) {
    CheckItem item;
    item.name = std::move(name);
    item.measured = worst;
    item.threshold = kGradTolerance;
    item.passed = worst < kGradTolerance;
    item.detail = std::move(detail);
    return item;
}

}  // namespace

CheckReport run_gradient_check(const RunConfig& config) {
    config.validate();
    const std::uint64_t seed = config.seeds.front();
    double worst_all = 0.0;
    double worst_no_reg = 0.0;
    double worst_src = 0.0;
    double worst_tgt = 0.0;
    double worst_wmmd = 0.0;
    std::size_t no_reg_cases = 0;
    for (std::size_t i = 0; i < config.checks.gradient_configs; ++i) {
        const GradCase g = random_case(i, seed);
        const double err = max_error(analytic_gradients(g, g.objective), numeric_gradients(g, g.objective, Term::total));
        worst_all = std::max(worst_all, err);
        if (g.objective.lambda == 0.0) {
            worst_no_reg = std::max(worst_no_reg, err);
            ++no_reg_cases;
        }

        // Per-term breakdown: each term isolated with unit coefficient.
        Objective src_only = g.objective;
        src_only.lambda = 0.0;
        src_only.gamma = 0.0;
        Objective with_tgt = src_only;
        with_tgt.gamma = 1.0;
        Objective with_reg = src_only;
        with_reg.lambda = 1.0;
        const Gradients src_grad = analytic_gradients(g, src_only);
        worst_src = std::max(worst_src, max_error(src_grad, numeric_gradients(g, src_only, Term::source_ce)));
        worst_tgt = std::max(worst_tgt, max_error(difference(analytic_gradients(g, with_tgt), src_grad),
                                                  numeric_gradients(g, with_tgt, Term::target_ce)));
        worst_wmmd = std::max(worst_wmmd, max_error(difference(analytic_gradients(g, with_reg), src_grad),
                                                    numeric_gradients(g, with_reg, Term::wmmd)));
    }
    CheckReport report;
    report.items.push_back(grad_item("full objective", worst_all,
                                     fmt::format("{} random configurations, central differences, step {}",
                                                 config.checks.gradient_configs, kFiniteStep)));
    report.items.push_back(grad_item("classification terms only (lambda = 0)", worst_no_reg,
                                     fmt::format("{} configurations", no_reg_cases)));
    report.items.push_back(grad_item("source cross-entropy", worst_src, "term isolated"));
    report.items.push_back(grad_item("target cross-entropy", worst_tgt, "term isolated"));
    report.items.push_back(grad_item("weighted discrepancy", worst_wmmd, "term isolated"));
    return report;
}

// ---- output ----

std::filesystem::path open_run_dir(const std::filesystem::path& base) {
    std::filesystem::create_directories(base);
    for (std::size_t k = 1; k < 100000; ++k) {
        const auto dir = base / fmt::format("run-{:03}", k);
        if (std::filesystem::create_directory(dir)) return dir;
    }
    throw DataError("no free run directory under " + base.string());
}

namespace {

std::ofstream open_new(const std::filesystem::path& path) {
    if (std::filesystem::exists(path)) throw DataError(path.string() + " already exists; refusing to overwrite");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

std::string join(const Vector& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{}", i ? ";" : "", v[i]);
    return s;
}

std::string csv_escape(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        if (ch != '\n') out += ch;
    }
    return out + "\"";
}

}  // namespace

void write_cells_csv(const std::filesystem::path& path, const std::vector<CellResult>& rows,
                     const std::string& setting_name) {
    auto out = open_new(path);
    out << setting_name << ",arm,seed,status,accuracy,alphas,error\n";
    for (const CellResult& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{}\n", r.setting, to_string(r.arm), r.seed, r.ok ? "ok" : "failed",
                           r.accuracy, join(r.alphas), r.ok ? "" : csv_escape(r.error));
    }
}

void write_losses_csv(const std::filesystem::path& path, const std::vector<CellResult>& rows,
                      const std::string& setting_name) {
    auto out = open_new(path);
    out << setting_name << ",arm,seed,epoch,loss\n";
    for (const CellResult& r : rows) {
        for (std::size_t e = 0; e < r.loss_history.size(); ++e) {
            out << fmt::format("{},{},{},{},{}\n", r.setting, to_string(r.arm), r.seed, e, r.loss_history[e]);
        }
    }
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& summary,
                       const std::string& setting_name) {
    auto out = open_new(path);
    out << setting_name << ",arm,count,failed,mean_accuracy,std_error\n";
    for (const SummaryRow& s : summary) {
        out << fmt::format("{},{},{},{},{},{}\n", s.setting, to_string(s.arm), s.count, s.failed, s.mean,
                           s.std_error);
    }
}

json summary_json(const std::vector<SummaryRow>& summary, const std::string& setting_name) {
    json rows = json::array();
    for (const SummaryRow& s : summary) {
        rows.push_back({{setting_name, s.setting},
                        {"arm", to_string(s.arm)},
                        {"count", s.count},
                        {"failed", s.failed},
                        {"mean_accuracy", s.mean},
                        {"std_error", s.std_error}});
    }
    return json{{"summary", rows}};
}

json report_json(const CheckReport& report) {
    json items = json::array();
    for (const CheckItem& i : report.items) {
        items.push_back({{"name", i.name},
                         {"passed", i.passed},
                         {"measured", i.measured},
                         {"threshold", i.threshold},
                         {"detail", i.detail}});
    }
    return json{{"passed", report.passed()}, {"checks", items}};
}

void write_report_csv(const std::filesystem::path& path, const CheckReport& report) {
    auto out = open_new(path);
    out << "check,status,measured,threshold,detail\n";
    for (const CheckItem& i : report.items) {
        out << fmt::format("{},{},{},{},{}\n", csv_escape(i.name), i.passed ? "pass" : "fail", i.measured,
                           i.threshold, csv_escape(i.detail));
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_new(path);
    out << j.dump(2) << '\n';
}

std::filesystem::path run_and_write_sweep(const RunConfig& config, std::vector<CellResult>* rows_out) {
    const bool bias = config.kind == ExperimentKind::bias_sweep;
    if (!bias && config.kind != ExperimentKind::lambda_sweep) throw ParameterError("not a sweep experiment");
    std::vector<CellResult> rows = bias ? run_bias_sweep(config) : run_lambda_sweep(config);
    const std::string name = bias ? "bias" : "lambda";
    const auto summary = summarize(rows);

    const auto dir = open_run_dir(config.output_dir);
    write_json(dir / "config.json", to_json(config));
    write_cells_csv(dir / "cells.csv", rows, name);
    write_losses_csv(dir / "losses.csv", rows, name);
    write_summary_csv(dir / "summary.csv", summary, name);
    write_json(dir / "summary.json", summary_json(summary, name));
    if (rows_out != nullptr) *rows_out = std::move(rows);
    return dir;
}

SingleRun run_single_train(const RunConfig& config) {
    config.validate();
    const std::uint64_t seed = config.seeds.front();
    Dataset source;
    Dataset target;
    if (config.source_csv && config.target_csv) {
        source = load_csv(*config.source_csv, CsvSchema{true, std::nullopt});
        target = load_csv(*config.target_csv);
        if (source.dim() != target.dim()) throw SchemaError("source and target CSV widths differ");
        if (target.has_labels()) {
            const std::size_t classes = std::max(source.class_count, target.class_count);
            source.class_count = classes;
            target.class_count = classes;
        }
    } else {
        const Vector priors = config.target_priors.empty() ? config.mixture.priors : config.target_priors;
        DomainPair pair = make_bias_pair(config.mixture, priors, config.n_source, config.n_target, data_seed(seed));
        source = std::move(pair.source);
        target = pair.target.evaluation_view();
    }
    SingleRun run;
    run.model = model_for(config, source.dim(), source.class_count);
    TrainConfig tc = config.train;
    tc.seed = train_seed(seed);
    tc = arm_config(tc, config.arm);
    TrainHooks hooks;
    if (target.has_labels()) hooks.evaluation = &target;
    run.state = train(source, target.features, run.model, tc, config.kernel, hooks);
    if (target.has_labels()) run.evaluation = evaluate(run.model, run.state.params, target);
    return run;
}

}  // namespace wmmd

#include "hedgebench/agents/policy.hpp"
#include "hedgebench/agents/trainer.hpp"
#include "hedgebench/baseline/black_scholes.hpp"
#include "hedgebench/errors.hpp"
#include "hedgebench/harness/experiment.hpp"
#include "hedgebench/harness/plot.hpp"
#include "hedgebench/harness/report.hpp"
#include "hedgebench/harness/worker_pool.hpp"
#include "hedgebench/market/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

namespace fs = std::filesystem;
using namespace hedgebench;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "hedgebench_out";
    std::string scale = "desk";
    std::string algo;
    std::string data;
    std::size_t threads = 0;
};

harness::ExperimentSpec load_spec(const Common& c) {
    auto spec = harness::ExperimentSpec::preset(harness::scale_from_string(c.scale));
    if (!c.config.empty()) {
        spec = harness::load_experiment_spec(c.config, spec);
    }
    if (c.seed) {
        spec.seed = *c.seed;
    }
    spec.validate();
    return spec;
}

harness::Datasets datasets_for(const Common& c, const harness::ExperimentSpec& spec) {
    if (!c.data.empty()) {
        return harness::load_datasets(c.data);
    }
    return harness::generate_datasets(spec);
}

agents::Algorithm require_algo(const Common& c) {
    if (c.algo.empty()) {
        throw ConfigError("--algo is required for this command");
    }
    return agents::algorithm_from_string(c.algo);
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

nlohmann::ordered_json trace_json(const agents::TrainingTrace& t) {
    nlohmann::ordered_json j;
    j["updates_done"] = t.updates_done;
    j["early_stopped"] = t.early_stopped;
    j["best_update"] = t.best_update;
    j["skipped_steps"] = t.skipped_steps;
    j["wall_clock_s"] = t.wall_clock_s;
    auto log = nlohmann::ordered_json::array();
    for (const auto& p : t.validation) log.push_back({{"update", p.update}, {"rsqp", p.rsqp}});
    j["validation"] = log;
    return j;
}

nlohmann::ordered_json evaluation_json(const std::string& name, const harness::Evaluation& e) {
    return {{"algorithm", name},
            {"per_set_rsqp", e.per_set},
            {"mean_rsqp", e.mean},
            {"std_rsqp", e.std},
            {"std_defined", e.std_defined}};
}

// Strategy named on the command line: "bs_dh" or an agent checkpoint file.
std::unique_ptr<env::Strategy> load_strategy(const std::string& what, const harness::ExperimentSpec& spec) {
    if (what == harness::kBaselineName) {
        return std::make_unique<baseline::DeltaHedge>(spec.env,
                                                      market::annualized_volatility(spec.garch, spec.env.delta_t));
    }
    return std::make_unique<agents::Policy>(agents::load_agent(what).policy);
}

int cmd_simulate(const Common& c) {
    const auto spec = load_spec(c);
    const auto data = harness::generate_datasets(spec);
    const fs::path dir = fs::path(c.out_dir) / "data";
    harness::save_datasets(data, dir);
    write_json(fs::path(c.out_dir) / "experiment.json", harness::to_json(spec));
    std::cout << "wrote " << data.train.size() << " train, " << data.validation.size() << " validation, "
              << data.tests.size() << " x " << spec.sizes.test_size << " test paths to " << dir.string() << '\n';
    for (const auto& w : data.train.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
}

int cmd_calibrate(const Common& c, const std::string& returns) {
    if (returns.empty()) throw ConfigError("calibrate needs --returns <csv>");
    const auto series = market::read_return_series(returns);
    const auto fit = market::calibrate_mle(series);
    nlohmann::ordered_json j;
    j["params"] = market::to_json(fit.params);
    j["nll"] = fit.nll;
    j["initial_nll"] = fit.initial_nll;
    j["evaluations"] = fit.evaluations;
    j["converged"] = fit.converged;
    j["warnings"] = fit.warnings;
    const fs::path out = fs::path(c.out_dir) / "calibration.json";
    write_json(out, j);
    std::cout << j["params"].dump() << "\nnll " << fit.nll << (fit.converged ? "" : " (not converged)") << '\n';
    return 0;
}

int cmd_train(const Common& c) {
    const auto spec = load_spec(c);
    const auto algo = require_algo(c);
    const auto data = datasets_for(c, spec);
    const double base_val = env::rsqp(baseline::run_delta_hedge(data.validation, spec.env));
    agents::Policy policy;
    harness::TrialResult trial;
    try {
        trial = harness::run_trial(spec, algo, data, base_val, &policy);
    } catch (const agents::TrainingDivergedError& e) {
        write_json(fs::path(c.out_dir) / (c.algo + "_trace.json"), trace_json(e.trace()));
        throw;
    }
    const fs::path out = fs::path(c.out_dir) / (agents::to_string(algo) + ".json");
    fs::create_directories(c.out_dir);
    agents::save_agent({policy, trial.config, spec.env, harness::derive_seed(spec.seed, static_cast<std::uint64_t>(algo) + 1),
                        trial.trace.best_update},
                       out);
    auto j = trace_json(trial.trace);
    j["baseline_validation_rsqp"] = base_val;
    j["test"] = evaluation_json(agents::to_string(algo), trial.evaluation);
    write_json(fs::path(c.out_dir) / (agents::to_string(algo) + "_trace.json"), j);
    std::cout << agents::to_string(algo) << ": " << trial.trace.updates_done << " updates, test RSQP "
              << trial.evaluation.mean << " (" << trial.evaluation.std << "), baseline validation " << base_val
              << "\ncheckpoint " << out.string() << '\n';
    return 0;
}

int cmd_gridsearch(const Common& c) {
    const auto spec = load_spec(c);
    const auto algo = require_algo(c);
    const auto data = datasets_for(c, spec);
    const auto result = harness::grid_search(spec, algo, data, harness::worker_count(c.threads));
    const fs::path out = fs::path(c.out_dir) / ("grid_" + agents::to_string(algo) + ".json");
    write_json(out, harness::to_json(result));
    std::size_t beat = 0;
    for (const auto& cell : result.cells) beat += cell.validation_rsqp < result.baseline_validation_rsqp ? 1 : 0;
    const auto& best = result.best();
    std::cout << "best: lr " << best.learning_rate << ", batch " << best.batch_size << ", " << best.hidden_layers
              << " x " << best.hidden_size << ", validation RSQP " << result.cells[result.best_index].validation_rsqp
              << "\n" << beat << " of " << result.cells.size() << " cells below baseline "
              << result.baseline_validation_rsqp << "\nwrote " << out.string() << '\n';
    return 0;
}

int cmd_evaluate(const Common& c, const std::string& checkpoint) {
    const auto spec = load_spec(c);
    const auto data = datasets_for(c, spec);
    const std::string what = checkpoint.empty() ? std::string(harness::kBaselineName) : checkpoint;
    const auto strategy = load_strategy(what, spec);
    const auto e = harness::evaluate(*strategy, data.tests, spec.env);
    write_json(fs::path(c.out_dir) / ("evaluation_" + strategy->name() + ".json"), evaluation_json(strategy->name(), e));
    std::cout << strategy->name() << ": mean RSQP " << e.mean << ", std " << e.std
              << (e.std_defined ? "" : " (single test set)") << '\n';
    return 0;
}

int cmd_compare(const Common& c, const std::string& checkpoints) {
    const auto spec = load_spec(c);
    const auto data = datasets_for(c, spec);
    harness::CompareOptions opt;
    opt.threads = harness::worker_count(c.threads);
    if (!checkpoints.empty()) {
        opt.checkpoint_dir = checkpoints;
    } else {
        opt.save_dir = fs::path(c.out_dir) / "checkpoints";
    }
    const auto report = harness::compare(spec, data, opt);
    harness::write_comparison(report, c.out_dir);
    harness::write_comparison_csv(std::cout, report);
    return 0;
}

int cmd_plot(const Common& c, const std::vector<std::string>& policies, std::size_t path_index) {
    const auto spec = load_spec(c);
    const auto data = datasets_for(c, spec);
    const auto& set = data.tests.front();
    if (path_index >= static_cast<std::size_t>(set.size())) {
        throw ConfigError("--path exceeds the test set size");
    }
    std::vector<std::unique_ptr<env::Strategy>> owned;
    std::vector<const env::Strategy*> strategies;
    for (const auto& p : policies) {
        owned.push_back(load_strategy(p, spec));
        strategies.push_back(owned.back().get());
    }
    const fs::path stem = fs::path(c.out_dir) / "positions";
    harness::emit_position_plot(strategies, set.path(static_cast<Eigen::Index>(path_index)), spec.env, stem);
    std::cout << "wrote " << stem.string() << ".svg and .csv\n";
    return 0;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "Experiment JSON");
    app->add_option("--seed", c.seed, "Master seed");
    app->add_option("--out-dir", c.out_dir, "Output directory");
    app->add_option("--scale", c.scale, "Preset sizes")->check(CLI::IsMember({"desk", "paper"}));
    app->add_option("--algo", c.algo, "dql|double_dql|dueling_dql|dd_dql|mcpg|ppo|ddpg|td3");
    app->add_option("--data", c.data, "Reuse datasets written by `simulate` (directory)");
    app->add_option("--threads", c.threads, "Worker threads (capped by HEDGEBENCH_THREADS)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep-hedging benchmark: GJR-GARCH paths, B-S delta hedge and eight RL agents"};
    app.require_subcommand(1);
    Common common;
    std::string returns, checkpoint, checkpoints;
    std::vector<std::string> plot_policies{harness::kBaselineName};
    std::size_t plot_path = 0;

    auto* simulate = app.add_subcommand("simulate", "Generate train/validation/test path sets");
    auto* calibrate = app.add_subcommand("calibrate", "Fit GJR-GARCH by maximum likelihood");
    auto* train = app.add_subcommand("train", "Train one algorithm and save its best checkpoint");
    auto* grid = app.add_subcommand("gridsearch", "Hyperparameter grid search for one algorithm");
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint (or bs_dh) on the test sets");
    auto* compare = app.add_subcommand("compare", "Train/evaluate every algorithm and write comparison reports");
    auto* plot = app.add_subcommand("plot", "Position-vs-price plot for one test path");
    for (auto* sub : {simulate, calibrate, train, grid, evaluate, compare, plot}) add_common(sub, common);
    calibrate->add_option("--returns", returns, "CSV with a price or return column")->required();
    evaluate->add_option("--checkpoint", checkpoint, "Agent checkpoint JSON (default: bs_dh)");
    compare->add_option("--checkpoints", checkpoints, "Load <algo>.json from this directory instead of training");
    plot->add_option("--policy", plot_policies, "bs_dh or checkpoint JSON; repeatable");
    plot->add_option("--path", plot_path, "Path index in the first test set");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*simulate) return cmd_simulate(common);
        if (*calibrate) return cmd_calibrate(common, returns);
        if (*train) return cmd_train(common);
        if (*grid) return cmd_gridsearch(common);
        if (*evaluate) return cmd_evaluate(common, checkpoint);
        if (*compare) return cmd_compare(common, checkpoints);
        if (*plot) return cmd_plot(common, plot_policies, plot_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include "hedgebench/harness/experiment.hpp"

#include "hedgebench/baseline/black_scholes.hpp"
#include "hedgebench/errors.hpp"
#include "hedgebench/harness/worker_pool.hpp"
#include "hedgebench/market/io.hpp"
#include "hedgebench/numcore/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <tuple>

namespace hedgebench::harness {

using agents::AgentConfig;
using agents::Algorithm;

std::string to_string(Scale s) { return s == Scale::Paper ? "paper" : "desk"; }

Scale scale_from_string(std::string_view s) {
    if (s == "desk") return Scale::Desk;
    if (s == "paper") return Scale::Paper;
    throw ConfigError("unknown scale '" + std::string(s) + "' (expected desk or paper)");
}

HyperGrid HyperGrid::standard() { return {{1e-3, 1e-4, 1e-5}, {64, 128, 256}, {2, 3, 4}, {64, 128, 256}}; }

std::size_t HyperGrid::size() const {
    return learning_rates.size() * batch_sizes.size() * hidden_layer_counts.size() * hidden_sizes.size();
}

std::vector<AgentConfig> HyperGrid::cells(const AgentConfig& base) const {
    std::vector<AgentConfig> out;
    out.reserve(size());
    for (double lr : learning_rates)
        for (int batch : batch_sizes)
            for (int layers : hidden_layer_counts)
                for (int width : hidden_sizes) out.push_back(base.with_grid(lr, batch, layers, width));
    return out;
}

ExperimentSpec ExperimentSpec::desk() {
    ExperimentSpec s;
    s.garch = market::GjrGarchParams::sp500_monthly();
    s.env = env::EnvConfig::standard(s.garch);
    s.sizes = {Eigen::Index{1} << 15, Eigen::Index{1} << 13, 5, Eigen::Index{1} << 13};
    s.algorithms.assign(agents::kAllAlgorithms.begin(), agents::kAllAlgorithms.end());
    s.grid = HyperGrid::standard();
    s.budget = 20000;
    s.tuning_budget = 10000;
    s.validation_every = 1000;
    s.seed = 2024;
    return s;
}

ExperimentSpec ExperimentSpec::paper() {
    ExperimentSpec s = desk();
    s.sizes = {Eigen::Index{1} << 19, Eigen::Index{1} << 17, 10, Eigen::Index{1} << 17};
    s.budget = 500000;
    s.tuning_budget = 200000;
    return s;
}

ExperimentSpec ExperimentSpec::preset(Scale scale) { return scale == Scale::Paper ? paper() : desk(); }

void ExperimentSpec::validate() const {
    env.validate();
    garch.validate();
    if (sizes.train < 1 || sizes.validation < 1 || sizes.n_test_sets < 1 || sizes.test_size < 1) {
        throw ConfigError("experiment: every dataset needs at least one path and one test set");
    }
    if (budget < 0 || tuning_budget < 0 || validation_every < 1) {
        throw ConfigError("experiment: budgets must be >= 0 and validation_every >= 1");
    }
    if (grid.size() == 0) {
        throw ConfigError("experiment: hyperparameter grid is empty");
    }
    for (const auto& [a, c] : agent_configs) {
        if (c.algorithm != a) {
            throw ConfigError("experiment: agent config for " + agents::to_string(a) + " names another algorithm");
        }
        c.validate();
    }
}

AgentConfig ExperimentSpec::config_for(Algorithm a) const {
    const auto it = agent_configs.find(a);
    return it != agent_configs.end() ? it->second : AgentConfig::tuned(a);
}

nlohmann::ordered_json to_json(const ExperimentSpec& s) {
    nlohmann::ordered_json j;
    j["env"] = env::to_json(s.env);
    j["garch"] = market::to_json(s.garch);
    j["sizes"] = {{"train", s.sizes.train},
                  {"validation", s.sizes.validation},
                  {"n_test_sets", s.sizes.n_test_sets},
                  {"test_size", s.sizes.test_size}};
    auto algos = nlohmann::ordered_json::array();
    for (auto a : s.algorithms) algos.push_back(agents::to_string(a));
    j["algorithms"] = algos;
    j["grid"] = {{"learning_rates", s.grid.learning_rates},
                 {"batch_sizes", s.grid.batch_sizes},
                 {"hidden_layer_counts", s.grid.hidden_layer_counts},
                 {"hidden_sizes", s.grid.hidden_sizes}};
    j["budget"] = s.budget;
    j["tuning_budget"] = s.tuning_budget;
    j["validation_every"] = s.validation_every;
    j["seed"] = s.seed;
    j["early_stopping"] = s.early_stopping;
    auto configs = nlohmann::ordered_json::object();
    for (const auto& [a, c] : s.agent_configs) configs[agents::to_string(a)] = agents::to_json(c);
    j["agent_configs"] = configs;
    return j;
}

namespace {

void reject_unknown(const nlohmann::ordered_json& j, std::initializer_list<const char*> known, const char* where) {
    if (!j.is_object()) {
        throw ConfigError(std::string(where) + ": expected an object");
    }
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
void read(const nlohmann::ordered_json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

ExperimentSpec experiment_spec_from_json(const nlohmann::ordered_json& j, ExperimentSpec s) {
    reject_unknown(j,
                   {"env", "garch", "sizes", "algorithms", "grid", "budget", "tuning_budget", "validation_every",
                    "seed", "early_stopping", "agent_configs"},
                   "experiment config");
    try {
        const bool explicit_premium = j.contains("env") && j.at("env").contains("premium");
        if (j.contains("garch")) {
            s.garch = market::params_from_json(j.at("garch"));
        }
        if (j.contains("env")) {
            s.env = env::env_config_from_json(j.at("env"), s.env);
        }
        if ((j.contains("garch") || j.contains("env")) && !explicit_premium) {
            const double sigma = market::annualized_volatility(s.garch, s.env.delta_t);
            s.env.premium = baseline::bs_call_price(
                {s.env.s0, s.env.strike, sigma, s.env.horizon * s.env.delta_t, s.env.r_f / s.env.delta_t});
        }
        if (j.contains("sizes")) {
            const auto& z = j.at("sizes");
            reject_unknown(z, {"train", "validation", "n_test_sets", "test_size"}, "sizes");
            read(z, "train", s.sizes.train);
            read(z, "validation", s.sizes.validation);
            read(z, "n_test_sets", s.sizes.n_test_sets);
            read(z, "test_size", s.sizes.test_size);
        }
        if (j.contains("algorithms")) {
            s.algorithms.clear();
            for (const auto& name : j.at("algorithms")) {
                s.algorithms.push_back(agents::algorithm_from_string(name.get<std::string>()));
            }
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            reject_unknown(g, {"learning_rates", "batch_sizes", "hidden_layer_counts", "hidden_sizes"}, "grid");
            read(g, "learning_rates", s.grid.learning_rates);
            read(g, "batch_sizes", s.grid.batch_sizes);
            read(g, "hidden_layer_counts", s.grid.hidden_layer_counts);
            read(g, "hidden_sizes", s.grid.hidden_sizes);
        }
        read(j, "budget", s.budget);
        read(j, "tuning_budget", s.tuning_budget);
        read(j, "validation_every", s.validation_every);
        read(j, "seed", s.seed);
        read(j, "early_stopping", s.early_stopping);
        if (j.contains("agent_configs")) {
            for (const auto& [name, body] : j.at("agent_configs").items()) {
                const Algorithm a = agents::algorithm_from_string(name);
                nlohmann::ordered_json c = body;
                if (!c.contains("algorithm")) c["algorithm"] = name;
                s.agent_configs[a] = agents::agent_config_from_json(c);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    s.validate();
    return s;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path, ExperimentSpec base) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return experiment_spec_from_json(j, std::move(base));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
    numcore::RngStream rng(master, 0x5EED0000ULL + tag);
    return rng.next_u64();
}

Datasets generate_datasets(const ExperimentSpec& spec) {
    spec.validate();
    const auto& z = spec.sizes;
    const auto T = spec.env.horizon;
    const auto s0 = spec.env.s0;
    const auto dt = spec.env.delta_t;
    Datasets d;
    std::uint64_t offset = 0;
    d.train = market::simulate_paths(spec.garch, z.train, T, s0, spec.seed, dt, offset);
    offset += static_cast<std::uint64_t>(z.train);
    d.validation = market::simulate_paths(spec.garch, z.validation, T, s0, spec.seed, dt, offset);
    offset += static_cast<std::uint64_t>(z.validation);
    for (int k = 0; k < z.n_test_sets; ++k) {
        d.tests.push_back(market::simulate_paths(spec.garch, z.test_size, T, s0, spec.seed, dt, offset));
        offset += static_cast<std::uint64_t>(z.test_size);
    }
    return d;
}

void save_datasets(const Datasets& d, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    market::write_pathset(d.train, dir / "train.hbps");
    market::write_pathset(d.validation, dir / "validation.hbps");
    for (std::size_t k = 0; k < d.tests.size(); ++k) {
        market::write_pathset(d.tests[k], dir / ("test_" + std::to_string(k) + ".hbps"));
    }
}

Datasets load_datasets(const std::filesystem::path& dir) {
    Datasets d;
    d.train = market::read_pathset(dir / "train.hbps");
    d.validation = market::read_pathset(dir / "validation.hbps");
    for (std::size_t k = 0;; ++k) {
        const auto p = dir / ("test_" + std::to_string(k) + ".hbps");
        if (!std::filesystem::exists(p)) break;
        d.tests.push_back(market::read_pathset(p));
    }
    if (d.tests.empty()) {
        throw IoError("no test_<k>.hbps files in " + dir.string());
    }
    return d;
}

bool early_stop_check(const std::vector<double>& log, double baseline_rsqp) {
    if (log.size() < 6) {
        return false;
    }
    const std::size_t first = log.size() - 6;
    const double anchor = log[first];
    for (std::size_t i = first; i < log.size(); ++i) {
        if (!(log[i] < baseline_rsqp)) return false;
        if (i > first && !(log[i] > anchor)) return false;
    }
    return true;
}

agents::StopRule early_stop_rule(double baseline_rsqp) {
    return [baseline_rsqp](const std::vector<double>& log) { return early_stop_check(log, baseline_rsqp); };
}

Evaluation summarize(std::vector<double> per_set) {
    if (per_set.empty()) {
        throw ContractError("evaluate: need at least one test set");
    }
    Evaluation e;
    const double n = static_cast<double>(per_set.size());
    double sum = 0.0;
    for (double v : per_set) sum += v;
    e.mean = sum / n;
    if (per_set.size() > 1) {
        double ss = 0.0;
        for (double v : per_set) ss += (v - e.mean) * (v - e.mean);
        e.std = std::sqrt(ss / (n - 1.0));
        e.std_defined = true;
    }
    e.per_set = std::move(per_set);
    return e;
}

Evaluation evaluate(const env::Strategy& strategy, const std::vector<market::PathSet>& tests,
                    const env::EnvConfig& config) {
    if (tests.empty()) {
        throw ContractError("evaluate: need at least one test set");
    }
    std::vector<double> per_set;
    per_set.reserve(tests.size());
    for (const auto& set : tests) {
        per_set.push_back(env::rsqp(env::run_episodes(strategy, set, config).losses));
    }
    return summarize(std::move(per_set));
}

std::size_t select_best_cell(const std::vector<GridCell>& cells) {
    if (cells.empty()) {
        throw ContractError("grid search: empty grid");
    }
    const auto key = [](const GridCell& c) {
        const double v = std::isnan(c.validation_rsqp) ? std::numeric_limits<double>::infinity() : c.validation_rsqp;
        return std::make_tuple(v, c.config.hidden_size, c.config.hidden_layers, c.config.batch_size,
                               -c.config.learning_rate);
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        if (key(cells[i]) < key(cells[best])) best = i;
    }
    return best;
}

namespace {

double baseline_rsqp(const ExperimentSpec& spec, const market::PathSet& set) {
    return env::rsqp(baseline::run_delta_hedge(set, spec.env));
}

}  // namespace

GridSearchResult grid_search(const ExperimentSpec& spec, Algorithm algorithm, const Datasets& data,
                             std::size_t threads) {
    spec.validate();
    GridSearchResult out;
    out.algorithm = algorithm;
    out.baseline_validation_rsqp = baseline_rsqp(spec, data.validation);
    const auto configs = spec.grid.cells(spec.config_for(algorithm));
    out.cells.resize(configs.size());
    parallel_for(configs.size(), threads, [&](std::size_t i) {
        GridCell& cell = out.cells[i];
        cell.config = configs[i];
        agents::TrainOptions opt;
        opt.budget = spec.tuning_budget;
        opt.validation_every = spec.validation_every;
        opt.seed = derive_seed(spec.seed, 1000 * (static_cast<std::uint64_t>(algorithm) + 1) + i);
        const auto started = std::chrono::steady_clock::now();
        try {
            const auto result = agents::train(cell.config, spec.env, data.train, data.validation, opt);
            const auto log = result.trace.validation_values();
            cell.validation_rsqp = log.empty() ? std::numeric_limits<double>::infinity()
                                               : *std::min_element(log.begin(), log.end());
            cell.updates = result.trace.updates_done;
        } catch (const agents::TrainingDivergedError& e) {
            cell.diverged = true;
            cell.error = e.what();
            cell.validation_rsqp = std::numeric_limits<double>::infinity();
            cell.updates = e.trace().updates_done;
        }
        cell.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    });
    out.best_index = select_best_cell(out.cells);
    return out;
}

nlohmann::ordered_json to_json(const GridSearchResult& r) {
    nlohmann::ordered_json j;
    j["algorithm"] = agents::to_string(r.algorithm);
    j["baseline_validation_rsqp"] = r.baseline_validation_rsqp;
    j["best_index"] = r.best_index;
    j["best_config"] = agents::to_json(r.best());
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : r.cells) {
        nlohmann::ordered_json e;
        e["learning_rate"] = c.config.learning_rate;
        e["batch_size"] = c.config.batch_size;
        e["hidden_layers"] = c.config.hidden_layers;
        e["hidden_size"] = c.config.hidden_size;
        e["validation_rsqp"] = std::isfinite(c.validation_rsqp) ? nlohmann::ordered_json(c.validation_rsqp)
                                                                : nlohmann::ordered_json(nullptr);
        e["diverged"] = c.diverged;
        e["updates"] = c.updates;
        e["runtime_s"] = c.runtime_s;
        if (!c.error.empty()) e["error"] = c.error;
        cells.push_back(e);
    }
    j["cells"] = cells;
    return j;
}

TrialResult run_trial(const ExperimentSpec& spec, Algorithm algorithm, const Datasets& data,
                      double baseline_validation_rsqp, agents::Policy* policy_out) {
    TrialResult r;
    r.algorithm = algorithm;
    r.config = spec.config_for(algorithm);
    agents::TrainOptions opt;
    opt.budget = spec.budget;
    opt.validation_every = spec.validation_every;
    opt.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(algorithm) + 1);
    if (spec.early_stopping) {
        opt.stop_rule = early_stop_rule(baseline_validation_rsqp);
    }
    auto result = agents::train(r.config, spec.env, data.train, data.validation, opt);
    r.runtime_s = result.trace.wall_clock_s;
    r.trace = result.trace;
    r.evaluation = evaluate(result.policy, data.tests, spec.env);
    if (policy_out != nullptr) {
        *policy_out = std::move(result.policy);
    }
    return r;
}

}  // namespace hedgebench::harness

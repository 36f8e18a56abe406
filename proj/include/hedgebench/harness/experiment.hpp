#pragma once

#include "hedgebench/agents/config.hpp"
#include "hedgebench/agents/trainer.hpp"
#include "hedgebench/env/hedge_env.hpp"
#include "hedgebench/market/garch.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hedgebench::harness {

enum class Scale { Desk, Paper };

std::string to_string(Scale s);
Scale scale_from_string(std::string_view s);

struct DatasetSizes {
    Eigen::Index train = 0;
    Eigen::Index validation = 0;
    int n_test_sets = 0;
    Eigen::Index test_size = 0;
};

struct HyperGrid {
    std::vector<double> learning_rates;
    std::vector<int> batch_sizes;
    std::vector<int> hidden_layer_counts;
    std::vector<int> hidden_sizes;

    /// {1e-3, 1e-4, 1e-5} x {64, 128, 256} x {2, 3, 4} x {64, 128, 256}.
    static HyperGrid standard();
    std::size_t size() const;
    /// Cells in row-major order: rate outermost, width innermost.
    std::vector<agents::AgentConfig> cells(const agents::AgentConfig& base) const;
};

struct ExperimentSpec {
    env::EnvConfig env;
    market::GjrGarchParams garch;
    DatasetSizes sizes;
    std::vector<agents::Algorithm> algorithms;
    HyperGrid grid;
    /// Training updates per algorithm in compare/train.
    std::int64_t budget = 0;
    /// Training updates per grid cell.
    std::int64_t tuning_budget = 0;
    std::int64_t validation_every = 1000;
    std::uint64_t seed = 0;
    bool early_stopping = true;
    /// Per-algorithm hyperparameters; algorithms absent here use their tuned defaults.
    std::map<agents::Algorithm, agents::AgentConfig> agent_configs;

    /// 2^15 / 2^13 / 5 x 2^13 paths, 20k training and 10k tuning updates.
    static ExperimentSpec desk();
    /// 2^19 / 2^17 / 10 x 2^17 paths, 500k training and 200k tuning updates.
    static ExperimentSpec paper();
    static ExperimentSpec preset(Scale s);

    void validate() const;
    agents::AgentConfig config_for(agents::Algorithm a) const;
};

nlohmann::ordered_json to_json(const ExperimentSpec& s);
/// Unknown keys are rejected at every level; absent keys keep `base`. When
/// the garch block changes and env.premium is not given, the premium is
/// re-priced from the new parameters.
ExperimentSpec experiment_spec_from_json(const nlohmann::ordered_json& j, ExperimentSpec base);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path, ExperimentSpec base);

/// Per-purpose seed derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

struct Datasets {
    market::PathSet train;
    market::PathSet validation;
    std::vector<market::PathSet> tests;
};

/// One master seed, disjoint stream ranges: train [0, n_train), validation
/// [n_train, n_train + n_val), test k the next test_size streams after that.
Datasets generate_datasets(const ExperimentSpec& spec);
/// train.hbps, validation.hbps, test_<k>.hbps (each with its JSON sidecar).
void save_datasets(const Datasets& d, const std::filesystem::path& dir);
Datasets load_datasets(const std::filesystem::path& dir);

/// True iff the log has at least 6 entries, each of the last 5 exceeds the
/// 6th-last, and all 6 lie below `baseline_rsqp`.
bool early_stop_check(const std::vector<double>& validation_log, double baseline_rsqp);
agents::StopRule early_stop_rule(double baseline_rsqp);

struct Evaluation {
    std::vector<double> per_set;
    double mean = 0.0;
    /// Sample (n - 1) standard deviation; 0 with std_defined = false for one set.
    double std = 0.0;
    bool std_defined = false;
};

Evaluation summarize(std::vector<double> per_set);
Evaluation evaluate(const env::Strategy& strategy, const std::vector<market::PathSet>& tests,
                    const env::EnvConfig& config);

struct TrialResult {
    agents::Algorithm algorithm = agents::Algorithm::Mcpg;
    agents::AgentConfig config;
    Evaluation evaluation;
    double runtime_s = 0.0;
    agents::TrainingTrace trace;
};

struct GridCell {
    agents::AgentConfig config;
    /// Best validation RSQP reached; +inf when training diverged.
    double validation_rsqp = 0.0;
    bool diverged = false;
    std::string error;
    double runtime_s = 0.0;
    std::int64_t updates = 0;
};

struct GridSearchResult {
    agents::Algorithm algorithm = agents::Algorithm::Mcpg;
    std::vector<GridCell> cells;  // grid order
    std::size_t best_index = 0;
    double baseline_validation_rsqp = 0.0;

    const agents::AgentConfig& best() const { return cells.at(best_index).config; }
};

/// Index of the lowest validation RSQP; ties go to the smaller width, then
/// fewer layers, then smaller batch, then larger learning rate.
std::size_t select_best_cell(const std::vector<GridCell>& cells);

/// Trains one trial per grid cell for spec.tuning_budget updates, scoring
/// each by its best validation RSQP. Cells run on up to `threads` workers;
/// a diverged cell scores +inf and never aborts the sweep.
GridSearchResult grid_search(const ExperimentSpec& spec, agents::Algorithm algorithm, const Datasets& data,
                             std::size_t threads);

nlohmann::ordered_json to_json(const GridSearchResult& r);

/// Trains one algorithm with spec.config_for() and evaluates it on every test set.
TrialResult run_trial(const ExperimentSpec& spec, agents::Algorithm algorithm, const Datasets& data,
                      double baseline_validation_rsqp, agents::Policy* policy_out = nullptr);

}  // namespace hedgebench::harness

#pragma once

#include "hedgebench/agents/config.hpp"
#include "hedgebench/agents/policy.hpp"
#include "hedgebench/env/hedge_env.hpp"
#include "hedgebench/errors.hpp"
#include "hedgebench/market/garch.hpp"
#include "hedgebench/numcore/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace hedgebench::agents {

struct ValidationPoint {
    std::int64_t update = 0;
    double rsqp = 0.0;
};

struct TrainingTrace {
    std::int64_t updates_done = 0;
    std::vector<ValidationPoint> validation;
    double wall_clock_s = 0.0;
    bool early_stopped = false;
    /// Update count of the returned checkpoint (0 when no validation ran).
    std::int64_t best_update = 0;
    /// MCPG batches whose losses were all non-positive (zero gradient, no step).
    std::int64_t skipped_steps = 0;

    std::vector<double> validation_values() const;
};

/// Decides from the validation log whether to stop.
using StopRule = std::function<bool(const std::vector<double>&)>;

struct TrainOptions {
    std::int64_t budget = 10000;
    std::int64_t validation_every = 1000;
    std::uint64_t seed = 0;
    StopRule stop_rule;
};

struct TrainResult {
    Policy policy;
    TrainingTrace trace;
};

/// Non-finite loss or gradient during training; carries the trace so far.
class TrainingDivergedError : public DivergenceError {
public:
    TrainingDivergedError(const std::string& what, TrainingTrace trace)
        : DivergenceError(what), trace_(std::move(trace)) {}
    const TrainingTrace& trace() const { return trace_; }

private:
    TrainingTrace trace_;
};

/// Runs the configured algorithm for `budget` gradient updates. Every
/// `validation_every` updates (and once more at the end, if the last update
/// was not validated) the deterministic policy is scored by RSQP on
/// `validation`; the lowest-scoring snapshot is returned. `stop_rule` is
/// consulted after each validation. Single-threaded and bit-reproducible
/// for a given seed.
TrainResult train(const AgentConfig& config, const env::EnvConfig& env, const market::PathSet& train_set,
                  const market::PathSet& validation, const TrainOptions& options);

/// Pathwise RSQP objective of a deterministic actor on a batch of paths and
/// its gradient with respect to the actor's parameters, differentiated
/// through the whole self-financing recursion.
struct McpgEvaluation {
    double objective = 0.0;
    Eigen::VectorXd gradient;
};
McpgEvaluation mcpg_objective(const Net& actor, const market::PathSet& batch, const env::EnvConfig& env);

/// One optimizer step on the batch objective. Returns false (and leaves the
/// actor untouched) when every loss in the batch is non-positive.
bool mcpg_update(Net& actor, numcore::Optimizer<double>& optimizer, const market::PathSet& batch,
                 const env::EnvConfig& env);

/// Linear epsilon-greedy schedule from start to end over
/// decay_fraction * budget updates.
double epsilon_at(const AgentConfig& config, std::int64_t updates, std::int64_t budget);

}  // namespace hedgebench::agents

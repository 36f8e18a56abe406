#pragma once

#include "hedgebench/agents/config.hpp"
#include "hedgebench/agents/networks.hpp"
#include "hedgebench/env/hedge_env.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace hedgebench::agents {

/// A trained decision rule. Every act() output lies in [0, 1].
class Policy final : public env::Strategy {
public:
    enum class Kind { GreedyQ, DeterministicContinuous, GaussianContinuous };

    Policy() = default;

    /// argmax over the action grid.
    static Policy greedy(QNetwork q, std::string label);
    /// Network output (logistic head) taken as the position.
    static Policy deterministic(Net actor, std::string label);
    /// Gaussian around the actor's output; act() returns the mean.
    static Policy gaussian(Net actor, double log_std, std::string label);

    Eigen::VectorXd act(const Eigen::MatrixXd& states) const override;
    std::string name() const override { return label_; }

    Kind kind() const { return kind_; }
    const Net& network() const { return q_.net; }
    bool dueling() const { return q_.dueling; }
    double log_std() const { return log_std_; }
    const QNetwork& q_network() const { return q_; }

private:
    Kind kind_ = Kind::DeterministicContinuous;
    QNetwork q_;  // holds the actor net for continuous kinds
    double log_std_ = 0.0;
    std::string label_;
};

std::string to_string(Policy::Kind k);

/// Policy plus the metadata needed to reproduce it.
struct AgentCheckpoint {
    Policy policy;
    AgentConfig config;
    env::EnvConfig env;
    std::uint64_t seed = 0;
    std::int64_t update_count = 0;
};

/// {"algorithm", "agent_config", "env", "seed", "update_count",
///  "policy": {"kind", "dueling", "log_std", "network": <numcore checkpoint>}}
nlohmann::ordered_json to_json(const AgentCheckpoint& c);
AgentCheckpoint agent_checkpoint_from_json(const nlohmann::ordered_json& j);
void save_agent(const AgentCheckpoint& c, const std::filesystem::path& path);
AgentCheckpoint load_agent(const std::filesystem::path& path);

}  // namespace hedgebench::agents

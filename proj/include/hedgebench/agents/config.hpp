#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <string>
#include <string_view>

namespace hedgebench::agents {

enum class Algorithm { Dql, DoubleDql, DuelingDql, DdDql, Mcpg, Ppo, Ddpg, Td3 };

inline constexpr std::array<Algorithm, 8> kAllAlgorithms = {
    Algorithm::Mcpg, Algorithm::Ppo,  Algorithm::Td3,       Algorithm::Dql,
    Algorithm::Ddpg, Algorithm::DuelingDql, Algorithm::DdDql, Algorithm::DoubleDql};

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);

bool is_value_based(Algorithm a);
bool uses_dueling_head(Algorithm a);
bool uses_double_target(Algorithm a);

/// Every knob of every training loop. Fields that an algorithm does not use
/// are ignored by it.
struct AgentConfig {
    Algorithm algorithm = Algorithm::Mcpg;

    // Grid-searched network/optimizer settings.
    double learning_rate = 1e-5;        // policy (alpha)
    double value_learning_rate = 1e-5;  // value function (beta); tied to alpha by default
    int batch_size = 256;
    int hidden_layers = 4;
    int hidden_size = 64;

    double gamma = 1.0;
    double target_rate = 0.005;  // soft target update rate

    // DQL family.
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.5;
    int replay_capacity = 100000;
    int learning_starts = 1000;

    // DDPG / TD3.
    double exploration_noise = 0.1;
    int policy_delay = 2;
    double target_noise = 0.1;
    double target_noise_clip = 0.25;

    // PPO.
    double ppo_clip = 0.2;
    int ppo_epochs = 10;
    double ppo_initial_log_std = -2.0;

    /// Tuned (learning rate, batch, layers, width) per algorithm with the
    /// remaining fields at their defaults; both learning rates share alpha.
    static AgentConfig tuned(Algorithm a);
    /// Same as tuned() but with the four grid fields replaced.
    AgentConfig with_grid(double lr, int batch, int layers, int width) const;

    void validate() const;
};

nlohmann::ordered_json to_json(const AgentConfig& c);
/// Unknown keys are rejected; absent keys keep tuned(algorithm) values.
AgentConfig agent_config_from_json(const nlohmann::ordered_json& j);

}  // namespace hedgebench::agents

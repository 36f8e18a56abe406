#include "hedgebench/agents/config.hpp"

#include "hedgebench/errors.hpp"

#include <cmath>
#include <set>

namespace hedgebench::agents {

namespace {

struct Named {
    Algorithm algorithm;
    std::string_view name;
};

constexpr std::array<Named, 8> kNames = {{{Algorithm::Dql, "dql"},
                                          {Algorithm::DoubleDql, "double_dql"},
                                          {Algorithm::DuelingDql, "dueling_dql"},
                                          {Algorithm::DdDql, "dd_dql"},
                                          {Algorithm::Mcpg, "mcpg"},
                                          {Algorithm::Ppo, "ppo"},
                                          {Algorithm::Ddpg, "ddpg"},
                                          {Algorithm::Td3, "td3"}}};

}  // namespace

std::string to_string(Algorithm a) {
    for (const auto& n : kNames) {
        if (n.algorithm == a) return std::string(n.name);
    }
    return "unknown";
}

Algorithm algorithm_from_string(std::string_view s) {
    for (const auto& n : kNames) {
        if (n.name == s) return n.algorithm;
    }
    throw ConfigError("unknown algorithm '" + std::string(s) +
                      "' (expected dql, double_dql, dueling_dql, dd_dql, mcpg, ppo, ddpg or td3)");
}

bool is_value_based(Algorithm a) {
    return a == Algorithm::Dql || a == Algorithm::DoubleDql || a == Algorithm::DuelingDql || a == Algorithm::DdDql;
}

bool uses_dueling_head(Algorithm a) { return a == Algorithm::DuelingDql || a == Algorithm::DdDql; }

bool uses_double_target(Algorithm a) { return a == Algorithm::DoubleDql || a == Algorithm::DdDql; }

AgentConfig AgentConfig::tuned(Algorithm a) {
    AgentConfig c;
    c.algorithm = a;
    switch (a) {
        case Algorithm::Mcpg:       return c.with_grid(1e-5, 256, 4, 64);
        case Algorithm::Ppo:        return c.with_grid(1e-5, 128, 2, 256);
        case Algorithm::Td3:        return c.with_grid(1e-5, 64, 4, 256);
        case Algorithm::Dql:        return c.with_grid(1e-4, 64, 4, 128);
        case Algorithm::Ddpg:       return c.with_grid(1e-5, 64, 4, 256);
        case Algorithm::DuelingDql: return c.with_grid(1e-4, 128, 3, 256);
        case Algorithm::DdDql:      return c.with_grid(1e-4, 256, 3, 256);
        case Algorithm::DoubleDql:  return c.with_grid(1e-4, 64, 4, 64);
    }
    return c;
}

AgentConfig AgentConfig::with_grid(double lr, int batch, int layers, int width) const {
    AgentConfig c = *this;
    c.learning_rate = lr;
    c.value_learning_rate = lr;
    c.batch_size = batch;
    c.hidden_layers = layers;
    c.hidden_size = width;
    return c;
}

void AgentConfig::validate() const {
    const auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!(learning_rate >= 0.0) || !(value_learning_rate >= 0.0) || !std::isfinite(learning_rate) ||
        !std::isfinite(value_learning_rate)) {
        throw ConfigError("AgentConfig: learning rates must be finite and non-negative");
    }
    if (batch_size < 1 || hidden_layers < 1 || hidden_size < 1) {
        throw ConfigError("AgentConfig: batch size, hidden layers and width must be positive");
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("AgentConfig: gamma must lie in [0, 1]");
    }
    if (!(target_rate > 0.0 && target_rate <= 1.0)) {
        throw ConfigError("AgentConfig: target_rate must lie in (0, 1]");
    }
    if (!positive(ppo_clip) || ppo_epochs < 1 || policy_delay < 1 || replay_capacity < batch_size ||
        learning_starts < 0 || exploration_noise < 0.0 || target_noise < 0.0 || target_noise_clip < 0.0) {
        throw ConfigError("AgentConfig: invalid algorithm-specific setting");
    }
    if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start && epsilon_start <= 1.0) ||
        !(epsilon_decay_fraction > 0.0)) {
        throw ConfigError("AgentConfig: invalid epsilon schedule");
    }
}

nlohmann::ordered_json to_json(const AgentConfig& c) {
    nlohmann::ordered_json j;
    j["algorithm"] = to_string(c.algorithm);
    j["learning_rate"] = c.learning_rate;
    j["value_learning_rate"] = c.value_learning_rate;
    j["batch_size"] = c.batch_size;
    j["hidden_layers"] = c.hidden_layers;
    j["hidden_size"] = c.hidden_size;
    j["gamma"] = c.gamma;
    j["target_rate"] = c.target_rate;
    j["epsilon_start"] = c.epsilon_start;
    j["epsilon_end"] = c.epsilon_end;
    j["epsilon_decay_fraction"] = c.epsilon_decay_fraction;
    j["replay_capacity"] = c.replay_capacity;
    j["learning_starts"] = c.learning_starts;
    j["exploration_noise"] = c.exploration_noise;
    j["policy_delay"] = c.policy_delay;
    j["target_noise"] = c.target_noise;
    j["target_noise_clip"] = c.target_noise_clip;
    j["ppo_clip"] = c.ppo_clip;
    j["ppo_epochs"] = c.ppo_epochs;
    j["ppo_initial_log_std"] = c.ppo_initial_log_std;
    return j;
}

AgentConfig agent_config_from_json(const nlohmann::ordered_json& j) {
    const AgentConfig reference;
    const auto keys = to_json(reference);
    for (const auto& [key, _] : j.items()) {
        if (!keys.contains(key)) {
            throw ConfigError("agent config: unknown key '" + key + "'");
        }
    }
    AgentConfig c = AgentConfig::tuned(algorithm_from_string(j.at("algorithm").get<std::string>()));
    try {
        const auto read = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
        };
        read("learning_rate", c.learning_rate);
        c.value_learning_rate = c.learning_rate;
        read("value_learning_rate", c.value_learning_rate);
        read("batch_size", c.batch_size);
        read("hidden_layers", c.hidden_layers);
        read("hidden_size", c.hidden_size);
        read("gamma", c.gamma);
        read("target_rate", c.target_rate);
        read("epsilon_start", c.epsilon_start);
        read("epsilon_end", c.epsilon_end);
        read("epsilon_decay_fraction", c.epsilon_decay_fraction);
        read("replay_capacity", c.replay_capacity);
        read("learning_starts", c.learning_starts);
        read("exploration_noise", c.exploration_noise);
        read("policy_delay", c.policy_delay);
        read("target_noise", c.target_noise);
        read("target_noise_clip", c.target_noise_clip);
        read("ppo_clip", c.ppo_clip);
        read("ppo_epochs", c.ppo_epochs);
        read("ppo_initial_log_std", c.ppo_initial_log_std);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("agent config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace hedgebench::agents

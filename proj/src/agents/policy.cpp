#include "hedgebench/agents/policy.hpp"

#include "hedgebench/errors.hpp"
#include "hedgebench/numcore/checkpoint.hpp"

#include <fstream>

namespace hedgebench::agents {

Policy Policy::greedy(QNetwork q, std::string label) {
    if (q.net.input_size() != 3) {
        throw ConfigError("Policy: networks take 3 state inputs");
    }
    Policy p;
    p.kind_ = Kind::GreedyQ;
    p.q_ = std::move(q);
    p.label_ = std::move(label);
    return p;
}

Policy Policy::deterministic(Net actor, std::string label) {
    if (actor.input_size() != 3 || actor.output_size() != 1) {
        throw ConfigError("Policy: actor must map 3 inputs to 1 output");
    }
    Policy p;
    p.kind_ = Kind::DeterministicContinuous;
    p.q_ = {std::move(actor), false};
    p.label_ = std::move(label);
    return p;
}

Policy Policy::gaussian(Net actor, double log_std, std::string label) {
    Policy p = deterministic(std::move(actor), std::move(label));
    p.kind_ = Kind::GaussianContinuous;
    p.log_std_ = log_std;
    return p;
}

Eigen::VectorXd Policy::act(const Eigen::MatrixXd& states) const {
    if (kind_ == Kind::GreedyQ) {
        const Eigen::VectorXi best = row_argmax(q_.q_values(states));
        Eigen::VectorXd out(best.size());
        for (Eigen::Index i = 0; i < best.size(); ++i) {
            out(i) = ActionGrid::value(best(i));
        }
        return out;
    }
    return q_.net.forward(states).col(0).cwiseMax(0.0).cwiseMin(1.0);
}

std::string to_string(Policy::Kind k) {
    switch (k) {
        case Policy::Kind::GreedyQ: return "greedy_q";
        case Policy::Kind::DeterministicContinuous: return "deterministic";
        case Policy::Kind::GaussianContinuous: return "gaussian";
    }
    return "unknown";
}

nlohmann::ordered_json to_json(const AgentCheckpoint& c) {
    nlohmann::ordered_json j;
    j["algorithm"] = to_string(c.config.algorithm);
    j["agent_config"] = to_json(c.config);
    j["env"] = env::to_json(c.env);
    j["seed"] = c.seed;
    j["update_count"] = c.update_count;
    nlohmann::ordered_json p;
    p["kind"] = to_string(c.policy.kind());
    p["dueling"] = c.policy.dueling();
    p["log_std"] = c.policy.log_std();
    p["network"] = numcore::to_json(numcore::Checkpoint{c.policy.network(), numcore::OptimizerKind::Adam, c.update_count});
    j["policy"] = p;
    return j;
}

AgentCheckpoint agent_checkpoint_from_json(const nlohmann::ordered_json& j) {
    try {
        AgentCheckpoint c;
        c.config = agent_config_from_json(j.at("agent_config"));
        c.env = env::env_config_from_json(j.at("env"), env::EnvConfig{});
        c.seed = j.at("seed").get<std::uint64_t>();
        c.update_count = j.at("update_count").get<std::int64_t>();
        const auto& p = j.at("policy");
        auto net = numcore::checkpoint_from_json(p.at("network")).net;
        const auto kind = p.at("kind").get<std::string>();
        const auto label = to_string(c.config.algorithm);
        if (kind == "greedy_q") {
            c.policy = Policy::greedy({std::move(net), p.at("dueling").get<bool>()}, label);
        } else if (kind == "deterministic") {
            c.policy = Policy::deterministic(std::move(net), label);
        } else if (kind == "gaussian") {
            c.policy = Policy::gaussian(std::move(net), p.at("log_std").get<double>(), label);
        } else {
            throw ConfigError("agent checkpoint: unknown policy kind '" + kind + "'");
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("agent checkpoint: ") + e.what());
    }
}

void save_agent(const AgentCheckpoint& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << to_json(c).dump(2) << '\n';
}

AgentCheckpoint load_agent(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    return agent_checkpoint_from_json(nlohmann::ordered_json::parse(in));
}

}  // namespace hedgebench::agents

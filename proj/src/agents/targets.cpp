#include "hedgebench/agents/targets.hpp"

#include "hedgebench/errors.hpp"

#include <algorithm>

namespace hedgebench::agents {

namespace {

void check_batch(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones, Eigen::Index rows) {
    if (rewards.size() != dones.size() || rewards.size() != rows) {
        throw ConfigError("target: rewards, dones and next-state values must share the batch size");
    }
}

Eigen::VectorXd bootstrap(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                          const Eigen::VectorXd& next_value, double gamma) {
    return (rewards.array() + (1.0 - dones.array()) * gamma * next_value.array()).matrix();
}

}  // namespace

Eigen::VectorXd dql_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                           const Eigen::MatrixXd& next_q_target, double gamma) {
    check_batch(rewards, dones, next_q_target.rows());
    return bootstrap(rewards, dones, next_q_target.rowwise().maxCoeff(), gamma);
}

Eigen::VectorXd dql_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                           const Eigen::MatrixXd& next_states, const QNetwork& target, double gamma) {
    return dql_target(rewards, dones, target.q_values(next_states), gamma);
}

Eigen::VectorXd double_dql_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                                  const Eigen::MatrixXd& next_q_online, const Eigen::MatrixXd& next_q_target,
                                  double gamma) {
    check_batch(rewards, dones, next_q_online.rows());
    if (next_q_online.rows() != next_q_target.rows() || next_q_online.cols() != next_q_target.cols()) {
        throw ConfigError("double_dql_target: online and target nets must share the action grid");
    }
    const Eigen::VectorXi best = row_argmax(next_q_online);
    Eigen::VectorXd value(best.size());
    for (Eigen::Index i = 0; i < best.size(); ++i) {
        value(i) = next_q_target(i, best(i));
    }
    return bootstrap(rewards, dones, value, gamma);
}

Eigen::VectorXd double_dql_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                                  const Eigen::MatrixXd& next_states, const QNetwork& online, const QNetwork& target,
                                  double gamma) {
    return double_dql_target(rewards, dones, online.q_values(next_states), target.q_values(next_states), gamma);
}

double ppo_clip_objective(double ratio, double advantage, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw ContractError("ppo_clip_objective: epsilon must be positive");
    }
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

Eigen::MatrixXd state_action(const Eigen::MatrixXd& states, const Eigen::VectorXd& actions) {
    Eigen::MatrixXd out(states.rows(), states.cols() + 1);
    out << states, actions;
    return out;
}

Eigen::VectorXd ddpg_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                            const Eigen::MatrixXd& next_states, const Net& target_actor, const Net& target_critic,
                            double gamma) {
    const Eigen::VectorXd next_actions = target_actor.forward(next_states).col(0).cwiseMax(0.0).cwiseMin(1.0);
    const Eigen::VectorXd q = target_critic.forward(state_action(next_states, next_actions)).col(0);
    check_batch(rewards, dones, q.size());
    return bootstrap(rewards, dones, q, gamma);
}

Eigen::VectorXd td3_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                           const Eigen::VectorXd& next_q1, const Eigen::VectorXd& next_q2, double gamma) {
    check_batch(rewards, dones, next_q1.size());
    if (next_q2.size() != next_q1.size()) {
        throw ConfigError("td3_target: twin critic outputs differ in size");
    }
    return bootstrap(rewards, dones, next_q1.cwiseMin(next_q2), gamma);
}

Eigen::VectorXd td3_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                           const Eigen::MatrixXd& next_states, const Net& target_actor, const Net& target_q1,
                           const Net& target_q2, double gamma, const TargetNoise& noise, numcore::RngStream& rng) {
    Eigen::VectorXd next_actions = target_actor.forward(next_states).col(0);
    for (Eigen::Index i = 0; i < next_actions.size(); ++i) {
        const double eps = noise.sigma > 0.0 ? std::clamp(noise.sigma * rng.normal(), -noise.clip, noise.clip) : 0.0;
        next_actions(i) = std::clamp(next_actions(i) + eps, 0.0, 1.0);
    }
    const Eigen::MatrixXd input = state_action(next_states, next_actions);
    return td3_target(rewards, dones, target_q1.forward(input).col(0), target_q2.forward(input).col(0), gamma);
}

}  // namespace hedgebench::agents

#pragma once

#include "hedgebench/agents/networks.hpp"
#include "hedgebench/numcore/rng.hpp"

#include <Eigen/Core>

namespace hedgebench::agents {

/// y = r + (1 - done) gamma max_a Q_target(s', a).
Eigen::VectorXd dql_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                           const Eigen::MatrixXd& next_q_target, double gamma);
Eigen::VectorXd dql_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                           const Eigen::MatrixXd& next_states, const QNetwork& target, double gamma);

/// a* = argmax_a Q_online(s', a); y = r + (1 - done) gamma Q_target(s', a*).
Eigen::VectorXd double_dql_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                                  const Eigen::MatrixXd& next_q_online, const Eigen::MatrixXd& next_q_target,
                                  double gamma);
Eigen::VectorXd double_dql_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                                  const Eigen::MatrixXd& next_states, const QNetwork& online, const QNetwork& target,
                                  double gamma);

/// min(ratio adv, clip(ratio, 1 - eps, 1 + eps) adv).
double ppo_clip_objective(double ratio, double advantage, double epsilon);

/// y = r + (1 - done) gamma Q_target(s', pi_target(s')).
Eigen::VectorXd ddpg_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                            const Eigen::MatrixXd& next_states, const Net& target_actor, const Net& target_critic,
                            double gamma);

struct TargetNoise {
    double sigma = 0.1;
    double clip = 0.25;
};

/// y = r + (1 - done) gamma min(Q1', Q2') evaluated at the smoothed target action.
Eigen::VectorXd td3_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                           const Eigen::VectorXd& next_q1, const Eigen::VectorXd& next_q2, double gamma);

/// Full TD3 target: a' = clamp(pi'(s') + clip(N(0, sigma^2), -c, c), 0, 1).
Eigen::VectorXd td3_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                           const Eigen::MatrixXd& next_states, const Net& target_actor, const Net& target_q1,
                           const Net& target_q2, double gamma, const TargetNoise& noise, numcore::RngStream& rng);

/// Critic input: state columns followed by the action column.
Eigen::MatrixXd state_action(const Eigen::MatrixXd& states, const Eigen::VectorXd& actions);

}  // namespace hedgebench::agents

#pragma once

#include "hedgebench/numcore/rng.hpp"

#include <Eigen/Core>

namespace hedgebench::agents {

/// One sampled minibatch, one transition per row.
struct TransitionBatch {
    Eigen::MatrixXd states;       // b x 3
    Eigen::VectorXd actions;      // b (position in [0, 1])
    Eigen::VectorXi action_index; // b (grid index, -1 for continuous agents)
    Eigen::VectorXd rewards;      // b
    Eigen::MatrixXd next_states;  // b x 3
    Eigen::VectorXd dones;        // b (0 or 1)
};

/// Fixed-capacity ring buffer of transitions. Sampling draws distinct slots
/// within a batch.
class ReplayBuffer {
public:
    explicit ReplayBuffer(Eigen::Index capacity, Eigen::Index state_dim = 3);

    Eigen::Index capacity() const { return capacity_; }
    Eigen::Index size() const { return size_; }

    void push(const Eigen::Ref<const Eigen::RowVectorXd>& state, double action, int action_index, double reward,
              const Eigen::Ref<const Eigen::RowVectorXd>& next_state, bool done);

    /// Throws ContractError if batch > size().
    TransitionBatch sample(Eigen::Index batch, numcore::RngStream& rng) const;

private:
    Eigen::Index capacity_;
    Eigen::Index size_ = 0;
    Eigen::Index cursor_ = 0;
    Eigen::MatrixXd states_;
    Eigen::VectorXd actions_;
    Eigen::VectorXi action_index_;
    Eigen::VectorXd rewards_;
    Eigen::MatrixXd next_states_;
    Eigen::VectorXd dones_;
};

}  // namespace hedgebench::agents

#include "hedgebench/agents/replay_buffer.hpp"

#include "hedgebench/errors.hpp"

#include <algorithm>
#include <vector>

namespace hedgebench::agents {

ReplayBuffer::ReplayBuffer(Eigen::Index capacity, Eigen::Index state_dim)
    : capacity_(capacity),
      states_(capacity, state_dim),
      actions_(capacity),
      action_index_(capacity),
      rewards_(capacity),
      next_states_(capacity, state_dim),
      dones_(capacity) {
    if (capacity < 1) {
        throw ConfigError("ReplayBuffer: capacity must be positive");
    }
}

void ReplayBuffer::push(const Eigen::Ref<const Eigen::RowVectorXd>& state, double action, int action_index,
                        double reward, const Eigen::Ref<const Eigen::RowVectorXd>& next_state, bool done) {
    states_.row(cursor_) = state;
    actions_(cursor_) = action;
    action_index_(cursor_) = action_index;
    rewards_(cursor_) = reward;
    next_states_.row(cursor_) = next_state;
    dones_(cursor_) = done ? 1.0 : 0.0;
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

TransitionBatch ReplayBuffer::sample(Eigen::Index batch, numcore::RngStream& rng) const {
    if (batch > size_) {
        throw ContractError("ReplayBuffer::sample: batch larger than buffer contents");
    }
    // Floyd's algorithm: `batch` distinct slots, in draw order.
    std::vector<Eigen::Index> slots;
    slots.reserve(static_cast<std::size_t>(batch));
    for (Eigen::Index j = size_ - batch; j < size_; ++j) {
        const auto r = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(j + 1)));
        const bool taken = std::find(slots.begin(), slots.end(), r) != slots.end();
        slots.push_back(taken ? j : r);
    }
    TransitionBatch b;
    b.states = states_(slots, Eigen::all);
    b.actions = actions_(slots);
    b.action_index = action_index_(slots);
    b.rewards = rewards_(slots);
    b.next_states = next_states_(slots, Eigen::all);
    b.dones = dones_(slots);
    return b;
}

}  // namespace hedgebench::agents

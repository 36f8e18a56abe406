#pragma once

#include "hedgebench/numcore/mlp.hpp"

#include <Eigen/Core>

#include <array>

namespace hedgebench::agents {

using Net = numcore::Mlp<double>;
using Tape = numcore::Tape<double>;
using Var = numcore::Var<double>;

/// The discrete position grid {0.00, 0.02, ..., 1.00}.
struct ActionGrid {
    static constexpr int kSize = 51;

    static constexpr double value(int index) { return static_cast<double>(index) / (kSize - 1); }
    static std::array<double, kSize> values() {
        std::array<double, kSize> v{};
        for (int i = 0; i < kSize; ++i) v[static_cast<std::size_t>(i)] = value(i);
        return v;
    }
};

/// Q(s, .) over an action grid. A dueling network emits one state value and
/// one advantage per action (k + 1 outputs) and is aggregated as
/// Q = V + A - mean(A); a plain network emits Q directly.
struct QNetwork {
    Net net;
    bool dueling = false;

    static QNetwork make(int hidden_layers, int width, bool dueling, int actions = ActionGrid::kSize);

    int action_count() const { return dueling ? net.output_size() - 1 : net.output_size(); }
    Eigen::MatrixXd q_values(const Eigen::MatrixXd& states) const;
    Var q_values(const numcore::MlpBinding<double>& binding, Var states) const;
};

/// Q = V + A - mean(A), row by row. V is b x 1, A is b x k.
Eigen::MatrixXd dueling_aggregate(const Eigen::VectorXd& state_value, const Eigen::MatrixXd& advantages);
Var dueling_aggregate(Var state_value, Var advantages);

/// Index of the largest entry in each row; ties resolve to the lowest index.
Eigen::VectorXi row_argmax(const Eigen::MatrixXd& m);

}  // namespace hedgebench::agents

#include "hedgebench/agents/networks.hpp"

#include "hedgebench/errors.hpp"

namespace hedgebench::agents {

QNetwork QNetwork::make(int hidden_layers, int width, bool dueling, int actions) {
    return {Net::make(3, hidden_layers, width, dueling ? actions + 1 : actions, numcore::OutputHead::Identity),
            dueling};
}

Eigen::MatrixXd QNetwork::q_values(const Eigen::MatrixXd& states) const {
    Eigen::MatrixXd out = net.forward(states);
    if (!dueling) {
        return out;
    }
    return dueling_aggregate(out.col(0), out.rightCols(out.cols() - 1));
}

Var QNetwork::q_values(const numcore::MlpBinding<double>& binding, Var states) const {
    Var out = net.forward(binding, states);
    if (!dueling) {
        return out;
    }
    Tape& tape = *states.tape;
    return dueling_aggregate(tape.slice_cols(out, 0, 1), tape.slice_cols(out, 1, out.cols() - 1));
}

Eigen::MatrixXd dueling_aggregate(const Eigen::VectorXd& state_value, const Eigen::MatrixXd& advantages) {
    if (state_value.size() != advantages.rows()) {
        throw ConfigError("dueling_aggregate: one state value per row required");
    }
    const Eigen::VectorXd shift = state_value - advantages.rowwise().mean();
    return advantages.colwise() + shift;
}

Var dueling_aggregate(Var state_value, Var advantages) {
    Tape& tape = *advantages.tape;
    return tape.add_col(advantages, tape.sub(state_value, tape.row_mean(advantages)));
}

Eigen::VectorXi row_argmax(const Eigen::MatrixXd& m) {
    Eigen::VectorXi out(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::Index best = 0;
        m.row(i).maxCoeff(&best);
        out(i) = static_cast<int>(best);
    }
    return out;
}

}  // namespace hedgebench::agents

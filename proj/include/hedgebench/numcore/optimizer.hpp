#pragma once

#include "hedgebench/errors.hpp"
#include "hedgebench/numcore/tape.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace hedgebench::numcore {

enum class OptimizerKind { Sgd, Adam };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_kind_from_string(std::string_view s);

/// First-order optimizer over a flat parameter vector.
///
/// SGD applies theta -= lr * g. Adam uses the bias-corrected moment
/// recurrences with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
template <typename Scalar>
class Optimizer {
public:
    using Vector = VectorX<Scalar>;

    static constexpr Scalar kBeta1 = Scalar(0.9);
    static constexpr Scalar kBeta2 = Scalar(0.999);
    static constexpr Scalar kEps = Scalar(1e-8);

    Optimizer(OptimizerKind kind, Scalar learning_rate, Eigen::Index parameter_count)
        : kind_(kind), lr_(learning_rate), m_(Vector::Zero(parameter_count)), v_(Vector::Zero(parameter_count)) {
        if (!(learning_rate >= Scalar(0)) || !std::isfinite(static_cast<double>(learning_rate))) {
            throw ConfigError("Optimizer: learning rate must be finite and non-negative");
        }
    }

    OptimizerKind kind() const { return kind_; }
    Scalar learning_rate() const { return lr_; }
    std::int64_t step_count() const { return steps_; }
    void set_step_count(std::int64_t steps) { steps_ = steps; }
    const Vector& first_moment() const { return m_; }
    const Vector& second_moment() const { return v_; }

    void step(Vector& params, const Vector& grads) {
        if (grads.size() != params.size() || params.size() != m_.size()) {
            throw ConfigError("Optimizer::step: gradient/parameter size mismatch");
        }
        if (!grads.allFinite()) {
            throw DivergenceError("Optimizer::step: non-finite gradient");
        }
        ++steps_;
        if (kind_ == OptimizerKind::Sgd) {
            params -= lr_ * grads;
            return;
        }
        m_ = kBeta1 * m_ + (Scalar(1) - kBeta1) * grads;
        v_ = kBeta2 * v_ + (Scalar(1) - kBeta2) * grads.cwiseAbs2();
        const Scalar c1 = Scalar(1) - std::pow(kBeta1, static_cast<Scalar>(steps_));
        const Scalar c2 = Scalar(1) - std::pow(kBeta2, static_cast<Scalar>(steps_));
        params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
    }

private:
    OptimizerKind kind_;
    Scalar lr_;
    Vector m_;
    Vector v_;
    std::int64_t steps_ = 0;
};

}  // namespace hedgebench::numcore

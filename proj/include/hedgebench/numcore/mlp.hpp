#pragma once

#include "hedgebench/errors.hpp"
#include "hedgebench/numcore/rng.hpp"
#include "hedgebench/numcore/tape.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace hedgebench::numcore {

enum class Activation { Relu, Tanh };
enum class OutputHead { Identity, Logistic };

std::string to_string(Activation a);
std::string to_string(OutputHead h);
Activation activation_from_string(std::string_view s);
OutputHead output_head_from_string(std::string_view s);

/// Tape handles for one network's parameters, registered once per tape so
/// that repeated forward passes (e.g. every step of an episode) accumulate
/// into the same adjoints.
template <typename Scalar>
struct MlpBinding {
    std::vector<Var<Scalar>> weights;
    std::vector<Var<Scalar>> biases;
};

/// Fully connected feed-forward network with a fixed hidden nonlinearity.
///
/// All parameters live in one flat vector. Layer l contributes its weight
/// matrix (n_in x n_out, row-major) followed by its bias (n_out), so the
/// flat layout is also the checkpoint layout and the optimizer's layout.
/// Inputs are batches: one sample per row.
template <typename Scalar>
class Mlp {
public:
    using Matrix = MatrixX<Scalar>;
    using Vector = VectorX<Scalar>;
    using RowMajorMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    Mlp() = default;

    Mlp(std::vector<int> layer_sizes, Activation hidden, OutputHead head)
        : layer_sizes_(std::move(layer_sizes)), hidden_(hidden), head_(head) {
        if (layer_sizes_.size() < 2) {
            throw ConfigError("Mlp: need at least an input and an output size");
        }
        Eigen::Index count = 0;
        for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
            if (layer_sizes_[l] <= 0 || layer_sizes_[l + 1] <= 0) {
                throw ConfigError("Mlp: layer sizes must be positive");
            }
            offsets_.push_back(count);
            count += static_cast<Eigen::Index>(layer_sizes_[l] + 1) * layer_sizes_[l + 1];
        }
        params_ = Vector::Zero(count);
    }

    /// Input width, `hidden_layers` layers of `width` units, output width.
    static Mlp make(int input, int hidden_layers, int width, int output, OutputHead head,
                    Activation hidden = Activation::Relu) {
        std::vector<int> sizes{input};
        for (int i = 0; i < hidden_layers; ++i) {
            sizes.push_back(width);
        }
        sizes.push_back(output);
        return Mlp(std::move(sizes), hidden, head);
    }

    /// Uniform fan-in initialization: U(-sqrt(6/n_in), +sqrt(6/n_in)) for
    /// layers feeding a ReLU, U(-sqrt(3/n_in), +sqrt(3/n_in)) otherwise;
    /// biases zero.
    void initialize(RngStream& rng) {
        params_.setZero();
        for (int l = 0; l < layer_count(); ++l) {
            const int n_in = layer_sizes_[l];
            const int n_out = layer_sizes_[l + 1];
            const bool feeds_relu = l + 1 < layer_count() && hidden_ == Activation::Relu;
            const double bound = std::sqrt((feeds_relu ? 6.0 : 3.0) / n_in);
            for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n_in) * n_out; ++k) {
                params_(offsets_[l] + k) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * bound);
            }
        }
    }

    const std::vector<int>& layer_sizes() const { return layer_sizes_; }
    int layer_count() const { return static_cast<int>(layer_sizes_.size()) - 1; }
    int input_size() const { return layer_sizes_.front(); }
    int output_size() const { return layer_sizes_.back(); }
    Activation hidden_activation() const { return hidden_; }
    OutputHead output_head() const { return head_; }

    Eigen::Index parameter_count() const { return params_.size(); }
    const Vector& parameters() const { return params_; }
    Vector& parameters() { return params_; }
    void set_parameters(const Vector& p) {
        if (p.size() != params_.size()) {
            throw ConfigError("Mlp::set_parameters: size mismatch");
        }
        params_ = p;
    }

    RowMajorMap weight(int l) const {
        return RowMajorMap(params_.data() + offsets_[l], layer_sizes_[l], layer_sizes_[l + 1]);
    }
    Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> bias(int l) const {
        const Eigen::Index at = offsets_[l] + static_cast<Eigen::Index>(layer_sizes_[l]) * layer_sizes_[l + 1];
        return {params_.data() + at, layer_sizes_[l + 1]};
    }

    /// Plain evaluation (no tape). `input` is batch x input_size.
    Matrix forward(const Matrix& input) const {
        check_input(input.cols());
        Matrix h = input;
        for (int l = 0; l < layer_count(); ++l) {
            Matrix z = (h * weight(l)).rowwise() + bias(l);
            if (l + 1 < layer_count()) {
                h = hidden_ == Activation::Relu ? Matrix(z.cwiseMax(Scalar(0))) : Matrix(z.array().tanh().matrix());
            } else {
                h = head_ == OutputHead::Logistic ? Matrix(z.unaryExpr(&Tape<Scalar>::logistic_scalar)) : z;
            }
        }
        return h;
    }

    MlpBinding<Scalar> bind(Tape<Scalar>& tape) const {
        MlpBinding<Scalar> b;
        for (int l = 0; l < layer_count(); ++l) {
            b.weights.push_back(tape.leaf(Matrix(weight(l))));
            b.biases.push_back(tape.leaf(Matrix(bias(l))));
        }
        return b;
    }

    /// Recorded evaluation. `input` is a batch x input_size node on the
    /// binding's tape.
    Var<Scalar> forward(const MlpBinding<Scalar>& b, Var<Scalar> input) const {
        check_input(input.cols());
        Tape<Scalar>& tape = *input.tape;
        Var<Scalar> h = input;
        for (int l = 0; l < layer_count(); ++l) {
            Var<Scalar> z = tape.add_row(tape.matmul(h, b.weights[l]), b.biases[l]);
            if (l + 1 < layer_count()) {
                h = hidden_ == Activation::Relu ? tape.relu(z) : tape.tanh(z);
            } else {
                h = head_ == OutputHead::Logistic ? tape.logistic(z) : z;
            }
        }
        return h;
    }

    /// Adjoints of the bound parameters, flattened in parameter order.
    /// Call after Tape::backward.
    Vector gradient(const Tape<Scalar>& tape, const MlpBinding<Scalar>& b) const {
        Vector g(params_.size());
        for (int l = 0; l < layer_count(); ++l) {
            const Matrix gw = tape.adjoint(b.weights[l]);
            const Matrix gb = tape.adjoint(b.biases[l]);
            Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                g.data() + offsets_[l], gw.rows(), gw.cols()) = gw;
            g.segment(offsets_[l] + gw.size(), gb.size()) = gb.transpose();
        }
        return g;
    }

    /// Polyak averaging: this <- (1 - rate) * this + rate * source.
    void soft_update_from(const Mlp& source, Scalar rate) {
        if (source.params_.size() != params_.size()) {
            throw ConfigError("soft_update_from: architecture mismatch");
        }
        params_ = (Scalar(1) - rate) * params_ + rate * source.params_;
    }

private:
    void check_input(Eigen::Index cols) const {
        if (cols != input_size()) {
            throw ConfigError("Mlp: input has " + std::to_string(cols) + " columns, network expects " +
                              std::to_string(input_size()));
        }
    }

    std::vector<int> layer_sizes_;
    std::vector<Eigen::Index> offsets_;
    Activation hidden_ = Activation::Relu;
    OutputHead head_ = OutputHead::Identity;
    Vector params_;
};

}  // namespace hedgebench::numcore

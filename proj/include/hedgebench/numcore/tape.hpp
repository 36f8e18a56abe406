#pragma once

#include "hedgebench/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace hedgebench::numcore {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

enum class OpKind : std::uint8_t {
    Leaf,
    Add,
    Sub,
    CwiseMul,
    Scale,
    AddScalar,
    MulConst,
    MatMul,
    AddRow,
    AddCol,
    Relu,
    Tanh,
    Logistic,
    Exp,
    Log,
    Sqrt,
    Square,
    Mean,
    Sum,
    RowMean,
    Clip,
    Max,
    Min,
    SelectPerRow,
    SliceCols,
    HConcat,
};

template <typename Scalar>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape is
/// not reset.
template <typename Scalar>
struct Var {
    Tape<Scalar>* tape = nullptr;
    Eigen::Index id = -1;

    const MatrixX<Scalar>& value() const { return tape->value(*this); }
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    /// Value of a 1x1 node.
    Scalar scalar() const { return value()(0, 0); }
};

/// Reverse-mode automatic differentiation over dense matrices.
///
/// Nodes are appended in evaluation order, so the node list is always a
/// topological order and the reverse pass is a single backward sweep.
/// Broadcasting is explicit: `add_row` adds a 1 x n row to every row of an
/// m x n matrix and `add_col` adds an m x 1 column to every column.
template <typename Scalar>
class Tape {
public:
    using Matrix = MatrixX<Scalar>;
    using V = Var<Scalar>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Drops every node. Handles issued before the reset become invalid.
    void reset() { nodes_.clear(); }

    std::size_t size() const { return nodes_.size(); }

    /// A differentiable input. Constants are leaves too; they simply never
    /// have their adjoint read.
    V leaf(Matrix value) { return push(OpKind::Leaf, -1, -1, std::move(value)); }
    V constant(Matrix value) { return leaf(std::move(value)); }
    V scalar_constant(Scalar value) { return leaf(Matrix::Constant(1, 1, value)); }

    const Matrix& value(V v) const { return nodes_[check(v)].value; }

    /// Adjoint after `backward`. Nodes not reachable from the root report zero.
    Matrix adjoint(V v) const {
        const Node& n = nodes_[check(v)];
        if (n.adjoint.size() == 0) {
            return Matrix::Zero(n.value.rows(), n.value.cols());
        }
        return n.adjoint;
    }

    /// Reverse pass from a 1x1 root. Clears adjoints from any earlier pass.
    void backward(V root) {
        const Eigen::Index r = check(root);
        if (nodes_[r].value.rows() != 1 || nodes_[r].value.cols() != 1) {
            throw ContractError("backward: root must be a 1x1 node, got " +
                                std::to_string(nodes_[r].value.rows()) + "x" +
                                std::to_string(nodes_[r].value.cols()));
        }
        for (Node& n : nodes_) {
            n.adjoint.resize(0, 0);
        }
        nodes_[r].adjoint = Matrix::Ones(1, 1);
        for (Eigen::Index i = r; i >= 0; --i) {
            if (nodes_[i].adjoint.size() != 0) {
                propagate(i);
            }
        }
    }

    // Binary elementwise.
    V add(V a, V b) { return binary(OpKind::Add, a, b, value(a) + value(b)); }
    V sub(V a, V b) { return binary(OpKind::Sub, a, b, value(a) - value(b)); }
    V cwise_mul(V a, V b) { return binary(OpKind::CwiseMul, a, b, value(a).cwiseProduct(value(b))); }
    V max(V a, V b) { return binary(OpKind::Max, a, b, value(a).cwiseMax(value(b))); }
    V min(V a, V b) { return binary(OpKind::Min, a, b, value(a).cwiseMin(value(b))); }

    V matmul(V a, V b) {
        if (value(a).cols() != value(b).rows()) {
            throw ConfigError("matmul: inner dimensions differ");
        }
        return push(OpKind::MatMul, a.id, b.id, value(a) * value(b));
    }

    /// m x n plus a 1 x n row, broadcast over rows.
    V add_row(V a, V row) {
        if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
            throw ConfigError("add_row: expected a 1 x n row");
        }
        Matrix out = value(a).rowwise() + value(row).row(0);
        return push(OpKind::AddRow, a.id, row.id, std::move(out));
    }

    /// m x n plus an m x 1 column, broadcast over columns.
    V add_col(V a, V col) {
        if (value(col).cols() != 1 || value(col).rows() != value(a).rows()) {
            throw ConfigError("add_col: expected an m x 1 column");
        }
        Matrix out = value(a).colwise() + value(col).col(0);
        return push(OpKind::AddCol, a.id, col.id, std::move(out));
    }

    /// Elementwise product with a constant matrix of the same shape.
    V mul_const(V a, const Matrix& c) {
        if (c.rows() != value(a).rows() || c.cols() != value(a).cols()) {
            throw ConfigError("mul_const: shape mismatch");
        }
        V k = constant(c);
        return push(OpKind::MulConst, a.id, k.id, value(a).cwiseProduct(c));
    }

    V scale(V a, Scalar c) { return push(OpKind::Scale, a.id, -1, value(a) * c, c); }
    V add_scalar(V a, Scalar c) { return push(OpKind::AddScalar, a.id, -1, value(a).array() + c); }

    // Unary elementwise.
    V relu(V a) { return unary(OpKind::Relu, a, value(a).cwiseMax(Scalar(0))); }
    V tanh(V a) { return unary(OpKind::Tanh, a, value(a).array().tanh().matrix()); }
    V logistic(V a) { return unary(OpKind::Logistic, a, value(a).unaryExpr(&logistic_scalar)); }
    V exp(V a) { return unary(OpKind::Exp, a, value(a).array().exp().matrix()); }
    V log(V a) { return unary(OpKind::Log, a, value(a).array().log().matrix()); }
    /// Derivative at exactly zero is taken as zero rather than infinity.
    V sqrt(V a) { return unary(OpKind::Sqrt, a, value(a).array().sqrt().matrix()); }
    V square(V a) { return unary(OpKind::Square, a, value(a).array().square().matrix()); }

    /// Clamp to [lo, hi]; gradient passes where lo <= x <= hi.
    V clip(V a, Scalar lo, Scalar hi) {
        return push(OpKind::Clip, a.id, -1, value(a).cwiseMax(lo).cwiseMin(hi), lo, hi);
    }

    // Reductions.
    V mean(V a) { return push(OpKind::Mean, a.id, -1, Matrix::Constant(1, 1, value(a).mean())); }
    V sum(V a) { return push(OpKind::Sum, a.id, -1, Matrix::Constant(1, 1, value(a).sum())); }
    /// m x n -> m x 1 mean of each row.
    V row_mean(V a) { return push(OpKind::RowMean, a.id, -1, value(a).rowwise().mean()); }

    /// m x n, indices[i] in [0, n) -> m x 1 with out(i) = a(i, indices[i]).
    V select_per_row(V a, std::vector<Eigen::Index> indices) {
        const Matrix& x = value(a);
        if (static_cast<Eigen::Index>(indices.size()) != x.rows()) {
            throw ConfigError("select_per_row: one index per row required");
        }
        Matrix out(x.rows(), 1);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (indices[i] < 0 || indices[i] >= x.cols()) {
                throw ConfigError("select_per_row: index out of range");
            }
            out(i, 0) = x(i, indices[i]);
        }
        V v = push(OpKind::SelectPerRow, a.id, -1, std::move(out));
        nodes_[v.id].indices = std::move(indices);
        return v;
    }

    V slice_cols(V a, Eigen::Index start, Eigen::Index count) {
        const Matrix& x = value(a);
        if (start < 0 || count < 0 || start + count > x.cols()) {
            throw ConfigError("slice_cols: range out of bounds");
        }
        return push(OpKind::SliceCols, a.id, -1, x.middleCols(start, count), static_cast<Scalar>(start));
    }

    V hconcat(V a, V b) {
        const Matrix& x = value(a);
        const Matrix& y = value(b);
        if (x.rows() != y.rows()) {
            throw ConfigError("hconcat: row counts differ");
        }
        Matrix out(x.rows(), x.cols() + y.cols());
        out << x, y;
        return push(OpKind::HConcat, a.id, b.id, std::move(out));
    }

    static Scalar logistic_scalar(Scalar x) {
        using std::exp;
        if (x >= Scalar(0)) {
            return Scalar(1) / (Scalar(1) + exp(-x));
        }
        const Scalar e = exp(x);
        return e / (Scalar(1) + e);
    }

private:
    struct Node {
        OpKind op;
        Eigen::Index a;
        Eigen::Index b;
        Scalar c0;
        Scalar c1;
        Matrix value;
        Matrix adjoint;
        std::vector<Eigen::Index> indices;
    };

    Eigen::Index check(V v) const {
        if (v.tape != this || v.id < 0 || v.id >= static_cast<Eigen::Index>(nodes_.size())) {
            throw ContractError("variable does not belong to this tape");
        }
        return v.id;
    }

    V push(OpKind op, Eigen::Index a, Eigen::Index b, Matrix value, Scalar c0 = Scalar(0), Scalar c1 = Scalar(0)) {
        nodes_.push_back(Node{op, a, b, c0, c1, std::move(value), Matrix(), {}});
        return V{this, static_cast<Eigen::Index>(nodes_.size()) - 1};
    }

    V unary(OpKind op, V a, Matrix value) { return push(op, check(a), -1, std::move(value)); }

    V binary(OpKind op, V a, V b, Matrix value) {
        const Matrix& x = nodes_[check(a)].value;
        const Matrix& y = nodes_[check(b)].value;
        if (x.rows() != y.rows() || x.cols() != y.cols()) {
            throw ConfigError("elementwise op: shape mismatch");
        }
        return push(op, a.id, b.id, std::move(value));
    }

    Matrix& acc(Eigen::Index i) {
        Node& n = nodes_[i];
        if (n.adjoint.size() == 0) {
            n.adjoint = Matrix::Zero(n.value.rows(), n.value.cols());
        }
        return n.adjoint;
    }

    void propagate(Eigen::Index i) {
        // Inputs always precede node i, so accumulating into them never
        // touches g.
        const Node& n = nodes_[i];
        const Matrix& g = n.adjoint;
        const Eigen::Index a = n.a;
        const Eigen::Index b = n.b;
        switch (n.op) {
            case OpKind::Leaf:
                break;
            case OpKind::Add:
                acc(a) += g;
                acc(b) += g;
                break;
            case OpKind::Sub:
                acc(a) += g;
                acc(b) -= g;
                break;
            case OpKind::CwiseMul: {
                const Matrix ga = g.cwiseProduct(nodes_[b].value);
                const Matrix gb = g.cwiseProduct(nodes_[a].value);
                acc(a) += ga;
                acc(b) += gb;
                break;
            }
            case OpKind::Scale:
                acc(a) += g * n.c0;
                break;
            case OpKind::AddScalar:
                acc(a) += g;
                break;
            case OpKind::MulConst:
                acc(a) += g.cwiseProduct(nodes_[b].value);
                break;
            case OpKind::MatMul: {
                const Matrix ga = g * nodes_[b].value.transpose();
                const Matrix gb = nodes_[a].value.transpose() * g;
                acc(a) += ga;
                acc(b) += gb;
                break;
            }
            case OpKind::AddRow:
                acc(a) += g;
                acc(b) += g.colwise().sum();
                break;
            case OpKind::AddCol:
                acc(a) += g;
                acc(b) += g.rowwise().sum();
                break;
            case OpKind::Relu:
                acc(a) += (nodes_[a].value.array() > Scalar(0)).select(g, Scalar(0)).matrix();
                break;
            case OpKind::Tanh:
                acc(a) += (g.array() * (Scalar(1) - n.value.array().square())).matrix();
                break;
            case OpKind::Logistic:
                acc(a) += (g.array() * n.value.array() * (Scalar(1) - n.value.array())).matrix();
                break;
            case OpKind::Exp:
                acc(a) += g.cwiseProduct(n.value);
                break;
            case OpKind::Log:
                acc(a) += g.cwiseQuotient(nodes_[a].value);
                break;
            case OpKind::Sqrt:
                acc(a) += (n.value.array() > Scalar(0))
                              .select(g.array() / (Scalar(2) * n.value.array()), Scalar(0))
                              .matrix();
                break;
            case OpKind::Square:
                acc(a) += (Scalar(2) * g.array() * nodes_[a].value.array()).matrix();
                break;
            case OpKind::Mean: {
                const Matrix& x = nodes_[a].value;
                acc(a).array() += g(0, 0) / static_cast<Scalar>(x.size());
                break;
            }
            case OpKind::Sum:
                acc(a).array() += g(0, 0);
                break;
            case OpKind::RowMean: {
                const Eigen::Index cols = nodes_[a].value.cols();
                acc(a).colwise() += (g.col(0) / static_cast<Scalar>(cols));
                break;
            }
            case OpKind::Clip: {
                const auto& x = nodes_[a].value.array();
                acc(a) += ((x >= n.c0) && (x <= n.c1)).select(g.array(), Scalar(0)).matrix();
                break;
            }
            case OpKind::Max: {
                const auto& x = nodes_[a].value.array();
                const auto& y = nodes_[b].value.array();
                const Matrix ga = (x >= y).select(g.array(), Scalar(0)).matrix();
                const Matrix gb = (x >= y).select(Scalar(0), g.array()).matrix();
                acc(a) += ga;
                acc(b) += gb;
                break;
            }
            case OpKind::Min: {
                const auto& x = nodes_[a].value.array();
                const auto& y = nodes_[b].value.array();
                const Matrix ga = (x <= y).select(g.array(), Scalar(0)).matrix();
                const Matrix gb = (x <= y).select(Scalar(0), g.array()).matrix();
                acc(a) += ga;
                acc(b) += gb;
                break;
            }
            case OpKind::SelectPerRow: {
                const std::vector<Eigen::Index>& idx = n.indices;
                Matrix& ga = acc(a);
                for (Eigen::Index r = 0; r < ga.rows(); ++r) {
                    ga(r, idx[r]) += g(r, 0);
                }
                break;
            }
            case OpKind::SliceCols: {
                const auto start = static_cast<Eigen::Index>(n.c0);
                acc(a).middleCols(start, g.cols()) += g;
                break;
            }
            case OpKind::HConcat: {
                const Eigen::Index left = nodes_[a].value.cols();
                const Matrix ga = g.leftCols(left);
                const Matrix gb = g.rightCols(g.cols() - left);
                acc(a) += ga;
                acc(b) += gb;
                break;
            }
        }
    }

    std::vector<Node> nodes_;
};

// Expression-style free functions so model code reads like math.

template <typename S> Var<S> operator+(Var<S> a, Var<S> b) { return a.tape->add(a, b); }
template <typename S> Var<S> operator-(Var<S> a, Var<S> b) { return a.tape->sub(a, b); }
template <typename S> Var<S> operator*(S c, Var<S> a) { return a.tape->scale(a, c); }
template <typename S> Var<S> operator*(Var<S> a, S c) { return a.tape->scale(a, c); }
template <typename S> Var<S> operator+(Var<S> a, S c) { return a.tape->add_scalar(a, c); }
template <typename S> Var<S> operator-(Var<S> a) { return a.tape->scale(a, S(-1)); }

template <typename S> Var<S> cwise_mul(Var<S> a, Var<S> b) { return a.tape->cwise_mul(a, b); }
template <typename S> Var<S> matmul(Var<S> a, Var<S> b) { return a.tape->matmul(a, b); }
template <typename S> Var<S> relu(Var<S> a) { return a.tape->relu(a); }
template <typename S> Var<S> tanh(Var<S> a) { return a.tape->tanh(a); }
template <typename S> Var<S> logistic(Var<S> a) { return a.tape->logistic(a); }
template <typename S> Var<S> exp(Var<S> a) { return a.tape->exp(a); }
template <typename S> Var<S> log(Var<S> a) { return a.tape->log(a); }
template <typename S> Var<S> sqrt(Var<S> a) { return a.tape->sqrt(a); }
template <typename S> Var<S> square(Var<S> a) { return a.tape->square(a); }
template <typename S> Var<S> mean(Var<S> a) { return a.tape->mean(a); }
template <typename S> Var<S> sum(Var<S> a) { return a.tape->sum(a); }
template <typename S> Var<S> row_mean(Var<S> a) { return a.tape->row_mean(a); }
template <typename S> Var<S> clip(Var<S> a, S lo, S hi) { return a.tape->clip(a, lo, hi); }
template <typename S> Var<S> max(Var<S> a, Var<S> b) { return a.tape->max(a, b); }
template <typename S> Var<S> min(Var<S> a, Var<S> b) { return a.tape->min(a, b); }
template <typename S> Var<S> hconcat(Var<S> a, Var<S> b) { return a.tape->hconcat(a, b); }

}  // namespace hedgebench::numcore

#include "hedgebench/errors.hpp"
#include "hedgebench/numcore/mlp.hpp"
#include "hedgebench/numcore/rng.hpp"

#include <gtest/gtest.h>

using namespace hedgebench::numcore;
using Net = Mlp<double>;
using Eigen::MatrixXd;

TEST(Mlp, ParameterCountFormula) {
    const Net net = Net::make(3, 4, 64, 1, OutputHead::Logistic);
    // (3+1)*64 + 3*(65*64) + 65*1
    EXPECT_EQ(net.parameter_count(), 4 * 64 + 3 * 65 * 64 + 65);
    const Net dueling = Net::make(3, 2, 128, 52, OutputHead::Identity);
    EXPECT_EQ(dueling.parameter_count(), 4 * 128 + 129 * 128 + 129 * 52);
}

TEST(Mlp, ZeroNetworkOutputsZero) {
    const Net net = Net::make(3, 2, 8, 2, OutputHead::Identity);
    MatrixXd x(1, 3);
    x << 0.3, -2.0, 7.0;
    EXPECT_TRUE(net.forward(x).isZero(0.0));
}

TEST(Mlp, IdentitySingleLayer) {
    Net net({3, 3}, Activation::Relu, OutputHead::Identity);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(net.parameter_count());
    p(0) = p(4) = p(8) = 1.0;  // row-major 3x3 identity, zero bias
    net.set_parameters(p);
    MatrixXd x(1, 3);
    x << 0.5, 1.1, 0.8;
    EXPECT_TRUE(net.forward(x).isApprox(x, 0.0));
}

TEST(Mlp, ForwardMatchesStraightLineArithmetic) {
    Net net = Net::make(3, 2, 64, 1, OutputHead::Logistic);
    RngStream rng(17, 0);
    net.initialize(rng);
    MatrixXd x(5, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();

    // Straight-line re-implementation reading the flat parameter vector directly.
    const Eigen::VectorXd& p = net.parameters();
    const std::vector<int> sizes = {3, 64, 64, 1};
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::vector<double> h(x.row(r).data(), x.row(r).data() + 0);
        h = {x(r, 0), x(r, 1), x(r, 2)};
        Eigen::Index at = 0;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const int n_in = sizes[l], n_out = sizes[l + 1];
            std::vector<double> z(n_out, 0.0);
            for (int j = 0; j < n_out; ++j) {
                double s = p(at + static_cast<Eigen::Index>(n_in) * n_out + j);
                for (int i = 0; i < n_in; ++i) s += h[i] * p(at + static_cast<Eigen::Index>(i) * n_out + j);
                z[j] = s;
            }
            at += static_cast<Eigen::Index>(n_in + 1) * n_out;
            for (auto& v : z) v = l + 2 < sizes.size() ? std::max(v, 0.0) : 1.0 / (1.0 + std::exp(-v));
            h = z;
        }
        EXPECT_NEAR(net.forward(x)(r, 0), h[0], 1e-12);
    }
}

TEST(Mlp, TapeForwardEqualsPlainForward) {
    Net net = Net::make(3, 3, 32, 4, OutputHead::Identity, Activation::Tanh);
    RngStream rng(5, 1);
    net.initialize(rng);
    MatrixXd x = MatrixXd::Random(7, 3);
    Tape<double> tape;
    const auto b = net.bind(tape);
    const auto y = net.forward(b, tape.constant(x));
    EXPECT_TRUE(y.value().isApprox(net.forward(x), 1e-14));
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
    Net net = Net::make(3, 3, 16, 1, OutputHead::Logistic);
    RngStream rng(23, 0);
    net.initialize(rng);
    MatrixXd x(6, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const MatrixXd target = MatrixXd::Constant(6, 1, 0.3);
    const auto loss_of = [&](const Net& n) {
        return (n.forward(x) - target).array().square().mean();
    };
    Tape<double> tape;
    const auto b = net.bind(tape);
    const auto out = net.forward(b, tape.constant(x));
    const auto loss = mean(square(out - tape.constant(target)));
    tape.backward(loss);
    const Eigen::VectorXd g = net.gradient(tape, b);
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < net.parameter_count(); ++k) {
        Net plus = net, minus = net;
        plus.parameters()(k) += h;
        minus.parameters()(k) -= h;
        const double fd = (loss_of(plus) - loss_of(minus)) / (2 * h);
        worst = std::max(worst, std::abs(g(k) - fd) / std::max({1.0, std::abs(g(k)), std::abs(fd)}));
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(Mlp, FiniteInputGivesFiniteOutput) {
    Net net = Net::make(3, 4, 256, 51, OutputHead::Identity);
    RngStream rng(1, 1);
    net.initialize(rng);
    const MatrixXd x = MatrixXd::Random(64, 3) * 100.0;
    EXPECT_TRUE(net.forward(x).allFinite());
}

TEST(Mlp, SoftUpdateIsPolyakAverage) {
    Net a = Net::make(3, 1, 4, 1, OutputHead::Identity);
    Net b = a;
    RngStream rng(2, 2);
    b.initialize(rng);
    const Eigen::VectorXd pa = a.parameters();
    a.soft_update_from(b, 0.25);
    EXPECT_TRUE(a.parameters().isApprox(0.75 * pa + 0.25 * b.parameters()));
}

TEST(Mlp, WrongInputWidthRejected) {
    const Net net = Net::make(3, 1, 4, 1, OutputHead::Identity);
    EXPECT_THROW(net.forward(MatrixXd::Zero(1, 4)), hedgebench::ConfigError);
}

TEST(Mlp, InitializationIsSeeded) {
    Net a = Net::make(3, 2, 8, 1, OutputHead::Identity);
    Net b = a;
    RngStream r1(3, 7), r2(3, 7);
    a.initialize(r1);
    b.initialize(r2);
    EXPECT_TRUE((a.parameters().array() == b.parameters().array()).all());
    // Biases start at zero.
    EXPECT_TRUE(a.bias(0).isZero(0.0));
}

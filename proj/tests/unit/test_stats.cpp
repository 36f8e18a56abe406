#include "hedgebench/errors.hpp"
#include "hedgebench/harness/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace hedgebench;
using namespace hedgebench::harness;

namespace {

// Straight-line Welch statistic with Boost's Student-t as the distribution.
double oracle_p(const std::vector<double>& a, const std::vector<double>& b) {
    auto moments = [](const std::vector<double>& x) {
        double m = 0.0;
        for (double v : x) m += v;
        m /= static_cast<double>(x.size());
        double s = 0.0;
        for (double v : x) s += (v - m) * (v - m);
        return std::pair{m, s / static_cast<double>(x.size() - 1)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double qa = va / static_cast<double>(a.size()), qb = vb / static_cast<double>(b.size());
    const double t = (ma - mb) / std::sqrt(qa + qb);
    const double df = (qa + qb) * (qa + qb) /
                      (qa * qa / static_cast<double>(a.size() - 1) + qb * qb / static_cast<double>(b.size() - 1));
    return boost::math::cdf(boost::math::students_t(df), t);
}

}  // namespace

TEST(IncompleteBeta, MatchesBoost) {
    for (double a : {0.5, 1.0, 2.5, 7.0, 40.0}) {
        for (double b : {0.5, 1.0, 3.0, 12.0}) {
            for (double x : {0.0, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0}) {
                EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12) << a << " " << b << " " << x;
            }
        }
    }
}

TEST(StudentT, MatchesBoost) {
    for (double df : {1.0, 2.3, 5.0, 17.5, 200.0}) {
        for (double t : {-8.0, -2.0, -0.3, 0.0, 0.7, 3.0}) {
            EXPECT_NEAR(student_t_cdf(t, df), boost::math::cdf(boost::math::students_t(df), t), 1e-12);
        }
    }
}

TEST(Welch, IdenticalSamplesGiveHalf) {
    const std::vector<double> a{0.8, 0.85, 0.9, 0.83};
    EXPECT_EQ(welch_t_test_one_sided(a, a), 0.5);
    const std::vector<double> c{1.0, 1.0, 1.0};
    EXPECT_EQ(welch_t_test_one_sided(c, c), 0.5);
}

TEST(Welch, OracleCases) {
    const std::vector<double> a{0.80, 0.81, 0.82}, b{0.90, 0.89, 0.91};
    const double p = welch_t_test_one_sided(a, b);
    const double q = welch_t_test_one_sided(b, a);
    EXPECT_LT(p, 0.01);
    EXPECT_GT(q, 0.99);
    EXPECT_NEAR(p, oracle_p(a, b), 1e-6);
    EXPECT_NEAR(q, oracle_p(b, a), 1e-6);
    const auto r = welch_t_test(a, b);
    EXPECT_NEAR(r.df, 4.0, 1e-12);
}

TEST(Welch, SwapComplementsAndMatchesOracle) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_int_distribution<int> size(2, 12);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> a(static_cast<std::size_t>(size(gen))), b(static_cast<std::size_t>(size(gen)));
        for (auto& x : a) x = 1.0 + 0.1 * n(gen);
        for (auto& x : b) x = 1.05 + 0.3 * n(gen);
        const double p = welch_t_test_one_sided(a, b);
        EXPECT_NEAR(p + welch_t_test_one_sided(b, a), 1.0, 1e-12);
        EXPECT_NEAR(p, oracle_p(a, b), 1e-9);
    }
}

TEST(Welch, ZeroVarianceDistinctMeans) {
    const std::vector<double> a{1.0, 1.0}, b{2.0, 2.0};
    EXPECT_EQ(welch_t_test_one_sided(a, b), 0.0);
    EXPECT_EQ(welch_t_test_one_sided(b, a), 1.0);
}

TEST(Welch, TooFewSamplesRejected) {
    const std::vector<double> one{1.0}, two{1.0, 2.0};
    EXPECT_THROW(welch_t_test_one_sided(one, two), ContractError);
}

#include "hedgebench/harness/stats.hpp"

#include "hedgebench/errors.hpp"

#include <cmath>
#include <limits>

namespace hedgebench::harness {

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double sample_mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x, double mean) {
    double s = 0.0;
    for (double v : x) s += (v - mean) * (v - mean);
    return s / static_cast<double>(x.size() - 1);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
        throw ContractError("incomplete_beta: need a, b > 0 and x in [0, 1]");
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) {
        throw ContractError("student_t_cdf: df must be positive");
    }
    if (std::isinf(t)) {
        return t > 0.0 ? 1.0 : 0.0;
    }
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t > 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw ContractError("welch_t_test: each sample needs at least 2 observations");
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = sample_mean(a);
    const double mb = sample_mean(b);
    const double sa = sample_variance(a, ma) / na;
    const double sb = sample_variance(b, mb) / nb;
    WelchResult r;
    if (sa + sb == 0.0) {
        r.t = ma == mb ? 0.0 : (ma < mb ? -std::numeric_limits<double>::infinity()
                                        : std::numeric_limits<double>::infinity());
        r.df = na + nb - 2.0;
        r.p_value = ma == mb ? 0.5 : (ma < mb ? 0.0 : 1.0);
        return r;
    }
    r.t = (ma - mb) / std::sqrt(sa + sb);
    r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    r.p_value = r.t == 0.0 ? 0.5 : student_t_cdf(r.t, r.df);
    return r;
}

double welch_t_test_one_sided(std::span<const double> a, std::span<const double> b) {
    return welch_t_test(a, b).p_value;
}

}  // namespace hedgebench::harness

#include "hedgebench/market/garch.hpp"

#include "hedgebench/errors.hpp"
#include "hedgebench/numcore/nelder_mead.hpp"
#include "hedgebench/numcore/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace hedgebench::market {

bool GjrGarchParams::is_valid() const {
    const bool finite = std::isfinite(mu) && std::isfinite(nu0) && std::isfinite(nu) && std::isfinite(lambda) &&
                        std::isfinite(xi);
    return finite && nu0 > 0.0 && nu >= 0.0 && xi >= 0.0 && nu + lambda >= 0.0;
}

void GjrGarchParams::validate() const {
    if (!is_valid()) {
        throw ConfigError("GJR-GARCH parameters violate positivity (need nu0 > 0, nu >= 0, xi >= 0, nu + lambda >= 0)");
    }
}

double stationary_variance(const GjrGarchParams& p) {
    if (!p.is_stationary()) {
        throw NonStationaryError("GJR-GARCH persistence nu + xi + lambda/2 = " + std::to_string(p.persistence()) +
                                 " >= 1");
    }
    return p.nu0 / (1.0 - p.persistence());
}

double annualized_volatility(const GjrGarchParams& p, double delta_t) {
    return std::sqrt(stationary_variance(p) / delta_t);
}

namespace {

double initial_variance(const GjrGarchParams& p) { return p.is_stationary() ? stationary_variance(p) : p.nu0; }

// Shared by the simulator and the likelihood so both apply the same branch.
double next_variance(const GjrGarchParams& p, double variance, double log_return) {
    const double eps = log_return - p.mu;
    const double leverage = log_return < p.mu ? p.lambda : 0.0;
    return p.nu0 + (p.nu + leverage) * eps * eps + p.xi * variance;
}

}  // namespace

PricePath PathSet::path(Eigen::Index i) const {
    PricePath p;
    p.s0 = s0;
    p.prices = prices.row(i).transpose();
    p.log_returns = log_returns.row(i).transpose();
    p.cond_variances = cond_variances.row(i).transpose();
    return p;
}

PathSet PathSet::subset(const std::vector<Eigen::Index>& indices) const {
    PathSet out;
    out.params = params;
    out.seed = seed;
    out.stream_offset = stream_offset;
    out.s0 = s0;
    out.delta_t = delta_t;
    out.prices = prices(indices, Eigen::all);
    out.log_returns = log_returns(indices, Eigen::all);
    out.cond_variances = cond_variances(indices, Eigen::all);
    return out;
}

PricePath simulate_path(const GjrGarchParams& p, double s0, const Eigen::VectorXd& innovations) {
    p.validate();
    const Eigen::Index horizon = innovations.size();
    PricePath path;
    path.s0 = s0;
    path.prices.resize(horizon + 1);
    path.log_returns.resize(horizon);
    path.cond_variances.resize(horizon);
    path.prices(0) = s0;
    double variance = initial_variance(p);
    for (Eigen::Index t = 0; t < horizon; ++t) {
        path.cond_variances(t) = variance;
        const double y = p.mu + std::sqrt(variance) * innovations(t);
        path.log_returns(t) = y;
        path.prices(t + 1) = path.prices(t) * std::exp(y);
        variance = next_variance(p, variance, y);
    }
    return path;
}

PathSet simulate_paths(const GjrGarchParams& p, Eigen::Index n, Eigen::Index horizon, double s0, std::uint64_t seed,
                       double delta_t, std::uint64_t stream_offset) {
    p.validate();
    if (n < 1 || horizon < 1) {
        throw ConfigError("simulate_paths: need n >= 1 and T >= 1");
    }
    if (!(s0 > 0.0) || !(delta_t > 0.0)) {
        throw ConfigError("simulate_paths: need s0 > 0 and delta_t > 0");
    }
    PathSet set;
    set.params = p;
    set.seed = seed;
    set.stream_offset = stream_offset;
    set.s0 = s0;
    set.delta_t = delta_t;
    if (!p.is_stationary()) {
        set.warnings.push_back("parameters are not covariance-stationary; sigma_1^2 initialized to nu0");
    }
    set.prices.resize(n, horizon + 1);
    set.log_returns.resize(n, horizon);
    set.cond_variances.resize(n, horizon);
    const double v0 = initial_variance(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        numcore::RngStream rng(seed, stream_offset + static_cast<std::uint64_t>(i));
        double price = s0;
        double variance = v0;
        set.prices(i, 0) = s0;
        for (Eigen::Index t = 0; t < horizon; ++t) {
            set.cond_variances(i, t) = variance;
            const double y = p.mu + std::sqrt(variance) * rng.normal();
            set.log_returns(i, t) = y;
            price *= std::exp(y);
            set.prices(i, t + 1) = price;
            variance = next_variance(p, variance, y);
        }
    }
    return set;
}

double negative_log_likelihood(const GjrGarchParams& p, const Eigen::VectorXd& returns) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    if (!p.is_valid() || !p.is_stationary()) {
        return kInf;
    }
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    double variance = stationary_variance(p);
    double total = 0.0;
    for (Eigen::Index t = 0; t < returns.size(); ++t) {
        if (!(variance > 0.0) || !std::isfinite(variance)) {
            return kInf;
        }
        const double e = returns(t) - p.mu;
        total += log_2pi + std::log(variance) + e * e / variance;
        variance = next_variance(p, variance, returns(t));
    }
    return 0.5 * total;
}

namespace {

// Unconstrained coordinates:
//   u0 = mu, u1 = log nu0, u2 = logit(persistence),
//   (u3, u4, 0) = softmax logits of (xi, nu/2, (nu + lambda)/2) as shares of
//   the persistence.
GjrGarchParams from_unconstrained(const Eigen::VectorXd& u) {
    const double persistence = 1.0 / (1.0 + std::exp(-u(2)));
    const double m = std::max({u(3), u(4), 0.0});
    const double e0 = std::exp(u(3) - m);
    const double e1 = std::exp(u(4) - m);
    const double e2 = std::exp(-m);
    const double total = e0 + e1 + e2;
    GjrGarchParams p;
    p.mu = u(0);
    p.nu0 = std::exp(u(1));
    p.xi = persistence * e0 / total;
    p.nu = 2.0 * persistence * e1 / total;
    p.lambda = 2.0 * persistence * e2 / total - p.nu;
    return p;
}

Eigen::VectorXd to_unconstrained(GjrGarchParams p) {
    constexpr double kFloor = 1e-8;
    p.xi = std::max(p.xi, kFloor);
    p.nu = std::max(p.nu, kFloor);
    const double upper = std::max(p.nu + p.lambda, kFloor);
    const double persistence = std::min(p.xi + 0.5 * (p.nu + upper), 1.0 - 1e-6);
    const double share_xi = p.xi;
    const double share_nu = 0.5 * p.nu;
    const double share_upper = 0.5 * upper;
    Eigen::VectorXd u(5);
    u << p.mu, std::log(p.nu0), std::log(persistence / (1.0 - persistence)), std::log(share_xi / share_upper),
        std::log(share_nu / share_upper);
    return u;
}

}  // namespace

CalibrationResult calibrate_mle(const Eigen::VectorXd& returns, std::optional<GjrGarchParams> init,
                                int max_evaluations) {
    if (returns.size() < 50) {
        throw ConfigError("calibrate_mle: need at least 50 returns, got " + std::to_string(returns.size()));
    }
    if (!returns.allFinite()) {
        throw ConfigError("calibrate_mle: returns contain non-finite values");
    }
    const double mean = returns.mean();
    const double variance = (returns.array() - mean).square().mean();
    if (!(variance > 0.0) || returns.maxCoeff() == returns.minCoeff()) {
        throw DegenerateDataError("calibrate_mle: return series has zero variance");
    }

    // Without a caller start, search from a persistent and a near-iid start
    // and keep the lower likelihood. With nu = lambda = 0 the variance never
    // moves off nu0 / (1 - xi), so the likelihood is flat along that ridge;
    // fits within kTie of each other count as equal and the less persistent
    // one wins.
    constexpr double kTie = 1e-7;
    std::vector<GjrGarchParams> starts;
    if (init) {
        init->validate();
        if (!init->is_stationary()) {
            throw NonStationaryError("calibrate_mle: initial parameters are not stationary");
        }
        starts.push_back(*init);
    } else {
        for (double xi : {0.8, 0.01}) {
            GjrGarchParams s;
            s.mu = mean;
            s.xi = xi;
            s.nu = xi > 0.5 ? 0.05 : 0.01;
            s.lambda = xi > 0.5 ? 0.1 : 0.01;
            s.nu0 = variance * (1.0 - s.persistence());
            starts.push_back(s);
        }
    }

    const auto objective = [&](const Eigen::VectorXd& u) {
        return negative_log_likelihood(from_unconstrained(u), returns);
    };
    Eigen::VectorXd step(5);
    step << 0.5 * std::sqrt(variance), 0.5, 0.5, 0.5, 0.5;
    numcore::NelderMeadOptions opt;
    opt.max_evaluations = max_evaluations;

    CalibrationResult result;
    result.initial_nll = negative_log_likelihood(starts.front(), returns);
    result.nll = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        const double start_nll = negative_log_likelihood(start, returns);
        const auto fit = numcore::nelder_mead(objective, to_unconstrained(start), step, opt);
        result.evaluations += fit.evaluations;
        // The transform floors zero coefficients, so a boundary start can
        // beat every interior point the search visits.
        const bool use_fit = fit.value <= start_nll;
        const double nll = use_fit ? fit.value : start_nll;
        const GjrGarchParams params = use_fit ? from_unconstrained(fit.x) : start;
        const bool tie = std::abs(nll - result.nll) <= kTie;
        if ((!tie && nll < result.nll) || (tie && params.persistence() < result.params.persistence())) {
            result.params = params;
            result.nll = nll;
            result.converged = fit.converged;
        }
    }
    if (!result.converged) {
        result.warnings.push_back("Nelder-Mead stopped at the evaluation budget before converging");
    }
    return result;
}

}  // namespace hedgebench::market

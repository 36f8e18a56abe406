#include "hedgebench/baseline/black_scholes.hpp"

#include "hedgebench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hedgebench::baseline {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double bs_call_price(const BsInputs& in) {
    if (!(in.spot > 0.0) || !(in.strike > 0.0) || !(in.sigma_ann > 0.0) || !(in.tau >= 0.0)) {
        throw ConfigError("bs_call_price: need S > 0, K > 0, sigma > 0, tau >= 0");
    }
    if (in.tau == 0.0) {
        return std::max(in.spot - in.strike, 0.0);
    }
    const double vol = in.sigma_ann * std::sqrt(in.tau);
    const double d1 = (std::log(in.spot / in.strike) + (in.r_f_ann + 0.5 * in.sigma_ann * in.sigma_ann) * in.tau) / vol;
    const double d2 = d1 - vol;
    return in.spot * std_normal_cdf(d1) - in.strike * std::exp(-in.r_f_ann * in.tau) * std_normal_cdf(d2);
}

double delta_hedge_position(double price, double strike, double sigma_ann, int t, int horizon, double delta_t,
                            double r_f_per_step) {
    if (t < 0 || t >= horizon) {
        throw ContractError("delta_hedge_position: no rebalancing at t = " + std::to_string(t) + " (T = " +
                            std::to_string(horizon) + ")");
    }
    if (!(sigma_ann > 0.0) || !(price > 0.0) || !(strike > 0.0)) {
        throw ConfigError("delta_hedge_position: need sigma > 0 and positive prices");
    }
    const double tau = (horizon - t) * delta_t;
    const double r_ann = r_f_per_step / delta_t;
    const double d1 = (std::log(price / strike) + (r_ann + 0.5 * sigma_ann * sigma_ann) * tau) / (sigma_ann * std::sqrt(tau));
    return std_normal_cdf(d1);
}

DeltaHedge::DeltaHedge(env::EnvConfig config, double sigma_ann) : config_(config), sigma_(sigma_ann) {
    config_.validate();
    if (!(sigma_ann > 0.0)) {
        throw ConfigError("DeltaHedge: sigma must be positive");
    }
}

Eigen::VectorXd DeltaHedge::act(const Eigen::MatrixXd& states) const {
    Eigen::VectorXd out(states.rows());
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
        const int t = static_cast<int>(std::lround(states(i, 0) * config_.horizon));
        const double price = states(i, 1) * config_.s0;
        out(i) = delta_hedge_position(price, config_.strike, sigma_, t, config_.horizon, config_.delta_t, config_.r_f);
    }
    return out;
}

Eigen::VectorXd run_delta_hedge(const market::PathSet& paths, const env::EnvConfig& config,
                                std::optional<double> sigma_ann) {
    const double sigma = sigma_ann ? *sigma_ann : market::annualized_volatility(paths.params, paths.delta_t);
    const DeltaHedge strategy(config, sigma);
    return env::run_episodes(strategy, paths, config).losses;
}

}  // namespace hedgebench::baseline

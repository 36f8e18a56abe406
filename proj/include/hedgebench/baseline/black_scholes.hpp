#pragma once

#include "hedgebench/env/hedge_env.hpp"
#include "hedgebench/market/garch.hpp"

#include <Eigen/Core>

#include <optional>

namespace hedgebench::baseline {

/// Phi(x) = erfc(-x / sqrt 2) / 2. The libm erfc is accurate to a few ulp,
/// well inside 1e-10 absolute.
double std_normal_cdf(double x);

struct BsInputs {
    double spot = 0.0;
    double strike = 0.0;
    double sigma_ann = 0.0;
    double tau = 0.0;
    double r_f_ann = 0.0;
};

/// European call S Phi(d1) - K exp(-r tau) Phi(d2); intrinsic value at tau = 0.
double bs_call_price(const BsInputs& in);

/// Phi(d1) with d1 = [log(S/K) + (r + sigma^2/2) tau] / (sigma sqrt tau),
/// tau = (T - t) delta_t years and r = r_f_per_step / delta_t.
/// Throws ContractError for t >= T.
double delta_hedge_position(double price, double strike, double sigma_ann, int t, int horizon, double delta_t,
                            double r_f_per_step);

/// Delta hedge as an env::Strategy: recovers t and S_t from the normalized state.
class DeltaHedge final : public env::Strategy {
public:
    DeltaHedge(env::EnvConfig config, double sigma_ann);

    Eigen::VectorXd act(const Eigen::MatrixXd& states) const override;
    std::string name() const override { return "bs_dh"; }
    double sigma_ann() const { return sigma_; }

private:
    env::EnvConfig config_;
    double sigma_;
};

/// Terminal losses of the delta hedge on every path. sigma_ann defaults to
/// the annualized stationary volatility of the path set's parameters.
Eigen::VectorXd run_delta_hedge(const market::PathSet& paths, const env::EnvConfig& config,
                                std::optional<double> sigma_ann = std::nullopt);

}  // namespace hedgebench::baseline

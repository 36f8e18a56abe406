#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hedgebench::market {

/// GJR-GARCH(1,1) log-return model:
///
///   Y_t       = mu + eps_t,   eps_t = sigma_t z_t
///   sigma_t^2 = nu0 + (nu + lambda I_{t-1}) eps_{t-1}^2 + xi sigma_{t-1}^2
///   I_{t-1}   = 1 if Y_{t-1} < mu else 0
///
/// All quantities are per time step.
struct GjrGarchParams {
    double mu = 0.0;
    double nu0 = 0.0;
    double nu = 0.0;
    double lambda = 0.0;
    double xi = 0.0;

    /// Monthly S&P 500 estimates used as the shipped default.
    static GjrGarchParams sp500_monthly() {
        return {0.00533410, 0.00018216, 0.00026564, 0.34275732, 0.70611408};
    }

    /// nu + xi + lambda / 2; the process is covariance-stationary iff < 1.
    double persistence() const { return nu + xi + 0.5 * lambda; }
    bool is_stationary() const { return persistence() < 1.0; }
    /// nu0 > 0, nu >= 0, xi >= 0, nu + lambda >= 0 (all finite).
    bool is_valid() const;
    /// Throws ConfigError when !is_valid().
    void validate() const;

    bool operator==(const GjrGarchParams&) const = default;
};

/// Unconditional per-step variance nu0 / (1 - nu - xi - lambda/2).
/// Throws NonStationaryError when the persistence is >= 1.
double stationary_variance(const GjrGarchParams& p);

/// sqrt(stationary_variance / delta_t).
double annualized_volatility(const GjrGarchParams& p, double delta_t);

struct PricePath {
    double s0 = 0.0;
    Eigen::VectorXd prices;          // T + 1
    Eigen::VectorXd log_returns;     // T
    Eigen::VectorXd cond_variances;  // T

    Eigen::Index horizon() const { return log_returns.size(); }
};

/// A batch of simulated paths stored row-wise: row i is path i.
struct PathSet {
    Eigen::MatrixXd prices;          // n x (T + 1)
    Eigen::MatrixXd log_returns;     // n x T
    Eigen::MatrixXd cond_variances;  // n x T
    GjrGarchParams params;
    std::uint64_t seed = 0;
    /// Path i was drawn from stream stream_offset + i.
    std::uint64_t stream_offset = 0;
    double s0 = 100.0;
    double delta_t = 1.0 / 12.0;
    std::vector<std::string> warnings;

    Eigen::Index size() const { return prices.rows(); }
    Eigen::Index horizon() const { return log_returns.cols(); }
    PricePath path(Eigen::Index i) const;
    /// Rows `indices` as a new PathSet (metadata copied).
    PathSet subset(const std::vector<Eigen::Index>& indices) const;
};

/// Deterministic recursion with caller-supplied innovations z_1..z_T.
/// sigma_1^2 is the stationary variance (nu0 when the model is not stationary).
PricePath simulate_path(const GjrGarchParams& p, double s0, const Eigen::VectorXd& innovations);

/// n paths of T steps. Path i draws its innovations from
/// RngStream(seed, stream_offset + i). Non-stationary parameters only add a
/// warning; invalid positivity throws ConfigError.
PathSet simulate_paths(const GjrGarchParams& p, Eigen::Index n, Eigen::Index horizon, double s0, std::uint64_t seed,
                       double delta_t = 1.0 / 12.0, std::uint64_t stream_offset = 0);

/// Gaussian negative log-likelihood of `returns`, with sigma_1^2 set to the
/// stationary variance. Returns +inf for invalid or non-stationary
/// parameters, or if any conditional variance is not positive.
double negative_log_likelihood(const GjrGarchParams& p, const Eigen::VectorXd& returns);

struct CalibrationResult {
    GjrGarchParams params;
    double nll = 0.0;
    double initial_nll = 0.0;
    int evaluations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Maximum-likelihood fit by Nelder-Mead in an unconstrained
/// parameterization that keeps nu0 > 0, nu >= 0, xi >= 0, nu + lambda >= 0
/// and persistence < 1. Without `init` the search runs from a persistent and
/// a near-iid start and keeps the lower likelihood. Requires at least 50
/// returns; throws DegenerateDataError for zero-variance data.
CalibrationResult calibrate_mle(const Eigen::VectorXd& returns, std::optional<GjrGarchParams> init = std::nullopt,
                                int max_evaluations = 5000);

}  // namespace hedgebench::market

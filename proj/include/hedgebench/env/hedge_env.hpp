#pragma once

#include "hedgebench/market/garch.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <iosfwd>
#include <span>
#include <string>

namespace hedgebench::env {

/// Short call hedged with the underlying. Rates are per step: cash accrues
/// by exp(r_f) each period.
struct EnvConfig {
    double strike = 100.0;
    int horizon = 12;
    double delta_t = 1.0 / 12.0;
    double r_f = 0.0;
    double s0 = 100.0;
    double premium = 0.0;

    /// K > 0, T >= 1, delta_t > 0, s0 > 0, premium > 0.
    void validate() const;

    /// K = s0 = 100, T = 12 monthly steps, r_f = 0, premium set to the
    /// Black-Scholes price at the model's annualized stationary volatility.
    static EnvConfig standard(const market::GjrGarchParams& params);
};

/// {"strike", "horizon", "delta_t", "r_f", "s0", "premium"}.
nlohmann::ordered_json to_json(const EnvConfig& c);
/// Unknown keys are rejected; absent keys keep `defaults`.
EnvConfig env_config_from_json(const nlohmann::ordered_json& j, EnvConfig defaults);

/// Self-financing ledger: V = S * X + M after every step.
struct HedgeAccount {
    int t = 0;
    double position = 0.0;
    double cash = 0.0;
    double value = 0.0;

    static HedgeAccount open(const EnvConfig& config) { return {0, 0.0, config.premium, config.premium}; }
};

/// Maps a batch of states (rows of t/T, S_t/S_0, V_t/V_0) to next positions.
class Strategy {
public:
    virtual ~Strategy() = default;
    virtual Eigen::VectorXd act(const Eigen::MatrixXd& states) const = 0;
    virtual std::string name() const = 0;
};

/// (t / T, S_t / S_0, V_t / V_0). The last coordinate may be negative.
Eigen::Vector3d make_state(int t, double price, double value, const EnvConfig& config);

/// Rebalance to `next_position` at price `price` (cost S_t (X_{t+1} - X_t)),
/// accrue cash by exp(r_f), then mark to `next_price`.
HedgeAccount step(const HedgeAccount& account, double next_position, double price, double next_price,
                  const EnvConfig& config);

/// R = -(S_T X_T + M_T - 1{S_T > K} (S_T - K)). Requires account.t == T.
double terminal_loss(const HedgeAccount& account, double terminal_price, const EnvConfig& config);

/// -R^2 1{R > 0}.
double reward(double loss);

/// Empirical root semi-quadratic penalty sqrt(mean(R^2 1{R > 0})).
double rsqp(std::span<const double> losses);
double rsqp(const Eigen::VectorXd& losses);

struct EpisodeRecord {
    Eigen::VectorXd prices;     // S_0..S_T
    Eigen::VectorXd positions;  // X_1..X_T
    Eigen::VectorXd cash;       // M_0..M_T
    Eigen::VectorXd values;     // V_0..V_T
    double terminal_loss = 0.0;
    double terminal_reward = 0.0;
    /// Set when the strategy proposed a position outside [0, 1] that was clamped.
    bool clamped = false;
};

EpisodeRecord run_episode(const Strategy& strategy, const market::PricePath& path, const EnvConfig& config);

struct BatchResult {
    Eigen::VectorXd losses;
    /// Number of (path, step) decisions clamped into [0, 1].
    Eigen::Index clamped = 0;
};

/// Vectorized run_episode over every path of the set; losses are ordered by
/// path index.
BatchResult run_episodes(const Strategy& strategy, const market::PathSet& paths, const EnvConfig& config);

/// CSV trace with columns t,S_t,X_t,M_t,V_t,R. X_t is the position held over
/// (t-1, t] (0 at t = 0); R is filled on the terminal row only.
void write_episode_csv(std::ostream& out, const EpisodeRecord& record);

/// Throws ConfigError unless the path set matches the configured horizon and s0.
void check_compatible(const market::PathSet& paths, const EnvConfig& config);

}  // namespace hedgebench::env

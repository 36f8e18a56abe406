#include "hedgebench/env/hedge_env.hpp"

#include "hedgebench/baseline/black_scholes.hpp"
#include "hedgebench/errors.hpp"

#include <cmath>
#include <ostream>

namespace hedgebench::env {

void EnvConfig::validate() const {
    if (!(strike > 0.0) || horizon < 1 || !(delta_t > 0.0) || !(s0 > 0.0) || !std::isfinite(r_f)) {
        throw ConfigError("EnvConfig: need K > 0, T >= 1, delta_t > 0, s0 > 0 and finite r_f");
    }
    if (!(premium > 0.0)) {
        throw ConfigError("EnvConfig: premium must be positive (V_0 normalizes the state)");
    }
}

EnvConfig EnvConfig::standard(const market::GjrGarchParams& params) {
    EnvConfig c;
    const double sigma = market::annualized_volatility(params, c.delta_t);
    c.premium = baseline::bs_call_price(
        {c.s0, c.strike, sigma, c.horizon * c.delta_t, c.r_f / c.delta_t});
    return c;
}

nlohmann::ordered_json to_json(const EnvConfig& c) {
    nlohmann::ordered_json j;
    j["strike"] = c.strike;
    j["horizon"] = c.horizon;
    j["delta_t"] = c.delta_t;
    j["r_f"] = c.r_f;
    j["s0"] = c.s0;
    j["premium"] = c.premium;
    return j;
}

EnvConfig env_config_from_json(const nlohmann::ordered_json& j, EnvConfig c) {
    const auto known = to_json(c);
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("env config: unknown key '" + key + "'");
        }
    }
    try {
        if (j.contains("strike")) c.strike = j.at("strike").get<double>();
        if (j.contains("horizon")) c.horizon = j.at("horizon").get<int>();
        if (j.contains("delta_t")) c.delta_t = j.at("delta_t").get<double>();
        if (j.contains("r_f")) c.r_f = j.at("r_f").get<double>();
        if (j.contains("s0")) c.s0 = j.at("s0").get<double>();
        if (j.contains("premium")) c.premium = j.at("premium").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("env config: ") + e.what());
    }
    return c;
}

Eigen::Vector3d make_state(int t, double price, double value, const EnvConfig& config) {
    if (config.premium == 0.0) {
        throw ConfigError("make_state: V_0 = 0 cannot normalize the portfolio value");
    }
    if (t < 0 || t >= config.horizon) {
        throw ContractError("make_state: t must lie in [0, T-1]");
    }
    return {static_cast<double>(t) / config.horizon, price / config.s0, value / config.premium};
}

HedgeAccount step(const HedgeAccount& account, double next_position, double price, double next_price,
                  const EnvConfig& config) {
    if (account.t >= config.horizon) {
        throw ContractError("step: account already at expiry");
    }
    const double cost = price * (next_position - account.position);
    HedgeAccount next;
    next.t = account.t + 1;
    next.position = next_position;
    next.cash = (account.cash - cost) * std::exp(config.r_f);
    next.value = next_price * next_position + next.cash;
    return next;
}

double terminal_loss(const HedgeAccount& account, double terminal_price, const EnvConfig& config) {
    if (account.t != config.horizon) {
        throw ContractError("terminal_loss: account is at t = " + std::to_string(account.t) + ", not T");
    }
    const double payout = terminal_price > config.strike ? terminal_price - config.strike : 0.0;
    const double profit = terminal_price * account.position + account.cash - payout;
    return -profit;
}

double reward(double loss) { return loss > 0.0 ? -loss * loss : 0.0; }

double rsqp(std::span<const double> losses) {
    if (losses.empty()) {
        throw ContractError("rsqp: empty loss sample");
    }
    double total = 0.0;
    for (double r : losses) {
        if (r > 0.0) total += r * r;
    }
    return std::sqrt(total / static_cast<double>(losses.size()));
}

double rsqp(const Eigen::VectorXd& losses) { return rsqp(std::span<const double>(losses.data(), losses.size())); }

void check_compatible(const market::PathSet& paths, const EnvConfig& config) {
    if (paths.horizon() != config.horizon) {
        throw ConfigError("path horizon " + std::to_string(paths.horizon()) + " differs from T = " +
                          std::to_string(config.horizon));
    }
    if (paths.size() > 0 && std::abs(paths.prices(0, 0) - config.s0) > 1e-12 * config.s0) {
        throw ConfigError("path set s0 differs from the environment's s0");
    }
}

namespace {

double clamp_position(double x, bool& clamped) {
    if (std::isnan(x)) {
        throw DivergenceError("strategy returned NaN position");
    }
    if (x < 0.0 || x > 1.0) {
        clamped = true;
        return x < 0.0 ? 0.0 : 1.0;
    }
    return x;
}

}  // namespace

EpisodeRecord run_episode(const Strategy& strategy, const market::PricePath& path, const EnvConfig& config) {
    config.validate();
    if (path.horizon() != config.horizon) {
        throw ConfigError("run_episode: path horizon differs from T");
    }
    const int horizon = config.horizon;
    EpisodeRecord rec;
    rec.prices = path.prices;
    rec.positions.resize(horizon);
    rec.cash.resize(horizon + 1);
    rec.values.resize(horizon + 1);
    HedgeAccount account = HedgeAccount::open(config);
    rec.cash(0) = account.cash;
    rec.values(0) = account.value;
    for (int t = 0; t < horizon; ++t) {
        const Eigen::MatrixXd state = make_state(t, path.prices(t), account.value, config).transpose();
        const double x = clamp_position(strategy.act(state)(0), rec.clamped);
        account = step(account, x, path.prices(t), path.prices(t + 1), config);
        rec.positions(t) = x;
        rec.cash(t + 1) = account.cash;
        rec.values(t + 1) = account.value;
    }
    rec.terminal_loss = terminal_loss(account, path.prices(horizon), config);
    rec.terminal_reward = reward(rec.terminal_loss);
    return rec;
}

BatchResult run_episodes(const Strategy& strategy, const market::PathSet& paths, const EnvConfig& config) {
    config.validate();
    check_compatible(paths, config);
    const Eigen::Index n = paths.size();
    const int horizon = config.horizon;
    const double accrual = std::exp(config.r_f);
    Eigen::VectorXd position = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd cash = Eigen::VectorXd::Constant(n, config.premium);
    Eigen::VectorXd value = cash;
    Eigen::MatrixXd states(n, 3);
    BatchResult out;
    for (int t = 0; t < horizon; ++t) {
        states.col(0).setConstant(static_cast<double>(t) / horizon);
        states.col(1) = paths.prices.col(t) / config.s0;
        states.col(2) = value / config.premium;
        Eigen::VectorXd next = strategy.act(states);
        if (next.size() != n) {
            throw ConfigError("strategy returned the wrong number of positions");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            bool clamped = false;
            next(i) = clamp_position(next(i), clamped);
            out.clamped += clamped ? 1 : 0;
        }
        cash = (cash.array() - paths.prices.col(t).array() * (next - position).array()) * accrual;
        position = next;
        value = paths.prices.col(t + 1).cwiseProduct(position) + cash;
    }
    const auto terminal = paths.prices.col(horizon).array();
    const Eigen::ArrayXd payout = (terminal > config.strike).select(terminal - config.strike, 0.0);
    out.losses = -(terminal * position.array() + cash.array() - payout).matrix();
    return out;
}

void write_episode_csv(std::ostream& out, const EpisodeRecord& record) {
    const auto horizon = record.positions.size();
    out << "t,S_t,X_t,M_t,V_t,R\n";
    out.precision(17);
    for (Eigen::Index t = 0; t <= horizon; ++t) {
        const double x = t == 0 ? 0.0 : record.positions(t - 1);
        out << t << ',' << record.prices(t) << ',' << x << ',' << record.cash(t) << ',' << record.values(t) << ',';
        if (t == horizon) out << record.terminal_loss;
        out << '\n';
    }
}

}  // namespace hedgebench::env

#include "hedgebench/agents/trainer.hpp"

#include "hedgebench/agents/replay_buffer.hpp"
#include "hedgebench/agents/targets.hpp"
#include "hedgebench/numcore/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace hedgebench::agents {

namespace {

using numcore::OptimizerKind;
using numcore::OutputHead;
using numcore::RngStream;
using Optimizer = numcore::Optimizer<double>;

// Stream ids under the training seed. Network initializers use
// kInitStream + k for the k-th network.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kPathStream = 16;
constexpr std::uint64_t kExploreStream = 17;
constexpr std::uint64_t kReplayStream = 18;
constexpr std::uint64_t kTargetNoiseStream = 19;
constexpr std::uint64_t kShuffleStream = 20;

// Tape matrices of a few hundred KB are allocated and freed every update;
// above glibc's mmap threshold each one becomes an mmap/munmap pair.
void keep_large_blocks_on_heap() {
#if defined(__GLIBC__)
    static const bool once = [] {
        mallopt(M_MMAP_THRESHOLD, 256 << 20);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
        return true;
    }();
    (void)once;
#endif
}

Net make_net(int inputs, const AgentConfig& c, int outputs, OutputHead head, std::uint64_t seed, std::uint64_t k) {
    Net net = Net::make(inputs, c.hidden_layers, c.hidden_size, outputs, head);
    RngStream rng(seed, kInitStream + k);
    net.initialize(rng);
    return net;
}

void require_finite(double loss, const char* what) {
    if (!std::isfinite(loss)) {
        throw DivergenceError(std::string(what) + " loss is not finite");
    }
}

// Validation, best-checkpoint tracking and early stopping shared by every
// training loop.
class Supervisor {
public:
    Supervisor(const env::EnvConfig& env, const market::PathSet& validation, const TrainOptions& options,
               TrainingTrace& trace)
        : env_(env), validation_(validation), options_(options), trace_(trace) {}

    /// Records one finished update; returns true when training must stop.
    template <typename Snapshot>
    bool after_update(Snapshot&& snapshot) {
        ++trace_.updates_done;
        if (options_.validation_every > 0 && trace_.updates_done % options_.validation_every == 0) {
            return validate(snapshot());
        }
        return false;
    }

    bool exhausted() const { return trace_.updates_done >= options_.budget; }
    std::int64_t updates() const { return trace_.updates_done; }

    template <typename Snapshot>
    Policy finish(Snapshot&& snapshot) {
        if (options_.budget == 0) {
            return snapshot();
        }
        if (trace_.validation.empty() || trace_.validation.back().update != trace_.updates_done) {
            validate(snapshot());
        }
        return best_;
    }

private:
    bool validate(Policy policy) {
        const double value = env::rsqp(env::run_episodes(policy, validation_, env_).losses);
        if (!std::isfinite(value)) {
            throw DivergenceError("validation RSQP is not finite");
        }
        trace_.validation.push_back({trace_.updates_done, value});
        if (value < best_value_) {
            best_value_ = value;
            best_ = std::move(policy);
            trace_.best_update = trace_.updates_done;
        }
        if (options_.stop_rule && options_.stop_rule(trace_.validation_values())) {
            trace_.early_stopped = true;
            return true;
        }
        return false;
    }

    const env::EnvConfig& env_;
    const market::PathSet& validation_;
    const TrainOptions& options_;
    TrainingTrace& trace_;
    Policy best_;
    double best_value_ = std::numeric_limits<double>::infinity();
};

// Walks training episodes one decision at a time for the step-based agents,
// starting a fresh uniformly drawn path after each expiry.
class EpisodeCursor {
public:
    EpisodeCursor(const market::PathSet& paths, const env::EnvConfig& env, RngStream rng)
        : paths_(paths), env_(env), rng_(rng) {
        restart();
    }

    Eigen::RowVector3d state() const {
        return env::make_state(account_.t, paths_.prices(path_, account_.t), account_.value, env_).transpose();
    }

    struct Outcome {
        double reward = 0.0;
        bool done = false;
        Eigen::RowVector3d next_state;
    };

    Outcome advance(double position) {
        const int t = account_.t;
        account_ = env::step(account_, position, paths_.prices(path_, t), paths_.prices(path_, t + 1), env_);
        Outcome out;
        if (account_.t == env_.horizon) {
            const double s_T = paths_.prices(path_, env_.horizon);
            out.reward = env::reward(env::terminal_loss(account_, s_T, env_));
            out.done = true;
            out.next_state << 1.0, s_T / env_.s0, account_.value / env_.premium;
            restart();
        } else {
            out.next_state = state();
        }
        return out;
    }

private:
    void restart() {
        path_ = static_cast<Eigen::Index>(rng_.uniform_index(static_cast<std::uint64_t>(paths_.size())));
        account_ = env::HedgeAccount::open(env_);
    }

    const market::PathSet& paths_;
    const env::EnvConfig& env_;
    RngStream rng_;
    Eigen::Index path_ = 0;
    env::HedgeAccount account_;
};

std::vector<Eigen::Index> sample_indices(Eigen::Index count, Eigen::Index population, RngStream& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(count));
    for (auto& i : idx) {
        i = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(population)));
    }
    return idx;
}

// ---------------------------------------------------------------- MCPG

Policy train_mcpg(const AgentConfig& c, const env::EnvConfig& env, const market::PathSet& train_set,
                  const TrainOptions& opt, Supervisor& sup, TrainingTrace& trace) {
    Net actor = make_net(3, c, 1, OutputHead::Logistic, opt.seed, 0);
    Optimizer optimizer(OptimizerKind::Adam, c.learning_rate, actor.parameter_count());
    RngStream sampler(opt.seed, kPathStream);
    const auto label = to_string(c.algorithm);
    const auto snapshot = [&] { return Policy::deterministic(actor, label); };
    while (!sup.exhausted()) {
        const market::PathSet batch = train_set.subset(sample_indices(c.batch_size, train_set.size(), sampler));
        if (!mcpg_update(actor, optimizer, batch, env)) {
            ++trace.skipped_steps;
        }
        if (sup.after_update(snapshot)) break;
    }
    return sup.finish(snapshot);
}

// ---------------------------------------------------------------- DQL family

Policy train_dql(const AgentConfig& c, const env::EnvConfig& env, const market::PathSet& train_set,
                 const TrainOptions& opt, Supervisor& sup) {
    const bool dueling = uses_dueling_head(c.algorithm);
    const bool double_q = uses_double_target(c.algorithm);
    QNetwork online = QNetwork::make(c.hidden_layers, c.hidden_size, dueling);
    {
        RngStream rng(opt.seed, kInitStream);
        online.net.initialize(rng);
    }
    QNetwork target = online;
    Optimizer optimizer(OptimizerKind::Adam, c.value_learning_rate, online.net.parameter_count());
    ReplayBuffer buffer(c.replay_capacity);
    EpisodeCursor cursor(train_set, env, RngStream(opt.seed, kPathStream));
    RngStream explore(opt.seed, kExploreStream);
    RngStream replay(opt.seed, kReplayStream);
    Tape tape;
    const auto label = to_string(c.algorithm);
    const auto snapshot = [&] { return Policy::greedy(online, label); };
    const Eigen::Index warmup = std::max<Eigen::Index>(c.learning_starts, c.batch_size);

    while (!sup.exhausted()) {
        const Eigen::RowVector3d s = cursor.state();
        int action = 0;
        if (explore.uniform() < epsilon_at(c, sup.updates(), opt.budget)) {
            action = static_cast<int>(explore.uniform_index(ActionGrid::kSize));
        } else {
            action = row_argmax(online.q_values(s))(0);
        }
        const auto out = cursor.advance(ActionGrid::value(action));
        buffer.push(s, ActionGrid::value(action), action, out.reward, out.next_state, out.done);
        if (buffer.size() < warmup) continue;

        const TransitionBatch b = buffer.sample(c.batch_size, replay);
        const Eigen::VectorXd y = double_q ? double_dql_target(b.rewards, b.dones, b.next_states, online, target, c.gamma)
                                           : dql_target(b.rewards, b.dones, b.next_states, target, c.gamma);
        tape.reset();
        const auto binding = online.net.bind(tape);
        const Var q = online.q_values(binding, tape.constant(b.states));
        const Var chosen = tape.select_per_row(q, std::vector<Eigen::Index>(b.action_index.begin(), b.action_index.end()));
        const Var loss = mean(square(chosen - tape.constant(y)));
        require_finite(loss.scalar(), "Q-network");
        tape.backward(loss);
        optimizer.step(online.net.parameters(), online.net.gradient(tape, binding));
        target.net.soft_update_from(online.net, c.target_rate);
        if (sup.after_update(snapshot)) break;
    }
    return sup.finish(snapshot);
}

// ---------------------------------------------------------------- DDPG / TD3

void critic_step(Net& critic, Optimizer& optimizer, const TransitionBatch& b, const Eigen::VectorXd& y, Tape& tape) {
    tape.reset();
    const auto binding = critic.bind(tape);
    const Var q = critic.forward(binding, tape.constant(state_action(b.states, b.actions)));
    const Var loss = mean(square(q - tape.constant(y)));
    require_finite(loss.scalar(), "critic");
    tape.backward(loss);
    optimizer.step(critic.parameters(), critic.gradient(tape, binding));
}

Policy train_actor_critic(const AgentConfig& c, const env::EnvConfig& env, const market::PathSet& train_set,
                          const TrainOptions& opt, Supervisor& sup) {
    const bool twin = c.algorithm == Algorithm::Td3;
    Net actor = make_net(3, c, 1, OutputHead::Logistic, opt.seed, 0);
    Net critic1 = make_net(4, c, 1, OutputHead::Identity, opt.seed, 1);
    Net critic2 = make_net(4, c, 1, OutputHead::Identity, opt.seed, 2);
    Net actor_target = actor;
    Net critic1_target = critic1;
    Net critic2_target = critic2;
    Optimizer actor_opt(OptimizerKind::Adam, c.learning_rate, actor.parameter_count());
    Optimizer critic1_opt(OptimizerKind::Adam, c.value_learning_rate, critic1.parameter_count());
    Optimizer critic2_opt(OptimizerKind::Adam, c.value_learning_rate, critic2.parameter_count());

    ReplayBuffer buffer(c.replay_capacity);
    EpisodeCursor cursor(train_set, env, RngStream(opt.seed, kPathStream));
    RngStream explore(opt.seed, kExploreStream);
    RngStream replay(opt.seed, kReplayStream);
    RngStream target_noise(opt.seed, kTargetNoiseStream);
    Tape tape;
    const auto label = to_string(c.algorithm);
    const auto snapshot = [&] { return Policy::deterministic(actor, label); };
    const Eigen::Index warmup = std::max<Eigen::Index>(c.learning_starts, c.batch_size);
    std::int64_t critic_updates = 0;

    while (!sup.exhausted()) {
        const Eigen::RowVector3d s = cursor.state();
        const double proposed = actor.forward(s)(0, 0) + c.exploration_noise * explore.normal();
        const double a = std::clamp(proposed, 0.0, 1.0);
        const auto out = cursor.advance(a);
        buffer.push(s, a, -1, out.reward, out.next_state, out.done);
        if (buffer.size() < warmup) continue;

        const TransitionBatch b = buffer.sample(c.batch_size, replay);
        const Eigen::VectorXd y =
            twin ? td3_target(b.rewards, b.dones, b.next_states, actor_target, critic1_target, critic2_target, c.gamma,
                              {c.target_noise, c.target_noise_clip}, target_noise)
                 : ddpg_target(b.rewards, b.dones, b.next_states, actor_target, critic1_target, c.gamma);
        critic_step(critic1, critic1_opt, b, y, tape);
        if (twin) {
            critic_step(critic2, critic2_opt, b, y, tape);
        }
        ++critic_updates;

        if (!twin || critic_updates % c.policy_delay == 0) {
            tape.reset();
            const auto actor_binding = actor.bind(tape);
            const auto critic_binding = critic1.bind(tape);
            const Var states = tape.constant(b.states);
            const Var actions = actor.forward(actor_binding, states);
            const Var q = critic1.forward(critic_binding, hconcat(states, actions));
            const Var loss = -mean(q);
            require_finite(loss.scalar(), "actor");
            tape.backward(loss);
            actor_opt.step(actor.parameters(), actor.gradient(tape, actor_binding));

            actor_target.soft_update_from(actor, c.target_rate);
            critic1_target.soft_update_from(critic1, c.target_rate);
            if (twin) {
                critic2_target.soft_update_from(critic2, c.target_rate);
            }
        }
        if (sup.after_update(snapshot)) break;
    }
    return sup.finish(snapshot);
}

// ---------------------------------------------------------------- PPO

// log N(a; mean, exp(log_std)^2), row by row.
Var gaussian_log_prob(Var actions, Var mean, Var log_std) {
    Tape& tape = *actions.tape;
    const Var z = tape.matmul(actions - mean, exp(-log_std));
    const Var half_sq = tape.scale(square(z), -0.5);
    return tape.add_scalar(tape.sub(half_sq, tape.matmul(tape.constant(Eigen::MatrixXd::Ones(z.rows(), 1)), log_std)),
                           -0.5 * std::log(2.0 * std::numbers::pi));
}

Policy train_ppo(const AgentConfig& c, const env::EnvConfig& env, const market::PathSet& train_set,
                 const TrainOptions& opt, Supervisor& sup) {
    Net actor = make_net(3, c, 1, OutputHead::Logistic, opt.seed, 0);
    Net critic = make_net(3, c, 1, OutputHead::Identity, opt.seed, 1);
    Eigen::VectorXd log_std = Eigen::VectorXd::Constant(1, c.ppo_initial_log_std);
    Optimizer actor_opt(OptimizerKind::Adam, c.learning_rate, actor.parameter_count());
    Optimizer log_std_opt(OptimizerKind::Adam, c.learning_rate, 1);
    Optimizer critic_opt(OptimizerKind::Adam, c.value_learning_rate, critic.parameter_count());
    RngStream sampler(opt.seed, kPathStream);
    RngStream explore(opt.seed, kExploreStream);
    RngStream shuffle(opt.seed, kShuffleStream);
    Tape tape;
    const auto label = to_string(c.algorithm);
    const auto snapshot = [&] { return Policy::gaussian(actor, log_std(0), label); };

    const int horizon = env.horizon;
    const Eigen::Index episodes = c.batch_size;
    const Eigen::Index rows = episodes * horizon;

    while (!sup.exhausted()) {
        // Roll out `episodes` paths in lockstep with the current stochastic policy.
        const market::PathSet batch = train_set.subset(sample_indices(episodes, train_set.size(), sampler));
        Eigen::MatrixXd states(rows, 3);
        Eigen::VectorXd raw_actions(rows);
        Eigen::VectorXd old_log_prob(rows);
        Eigen::VectorXd position = Eigen::VectorXd::Zero(episodes);
        Eigen::VectorXd cash = Eigen::VectorXd::Constant(episodes, env.premium);
        Eigen::VectorXd value = cash;
        const double sigma = std::exp(log_std(0));
        for (int t = 0; t < horizon; ++t) {
            Eigen::MatrixXd s(episodes, 3);
            s.col(0).setConstant(static_cast<double>(t) / horizon);
            s.col(1) = batch.prices.col(t) / env.s0;
            s.col(2) = value / env.premium;
            const Eigen::VectorXd mean = actor.forward(s).col(0);
            Eigen::VectorXd next(episodes);
            for (Eigen::Index i = 0; i < episodes; ++i) {
                const double z = explore.normal();
                const double raw = mean(i) + sigma * z;
                const Eigen::Index row = i * horizon + t;
                raw_actions(row) = raw;
                old_log_prob(row) = -0.5 * z * z - log_std(0) - 0.5 * std::log(2.0 * std::numbers::pi);
                next(i) = std::clamp(raw, 0.0, 1.0);
            }
            for (Eigen::Index i = 0; i < episodes; ++i) {
                states.row(i * horizon + t) = s.row(i);
            }
            cash = (cash.array() - batch.prices.col(t).array() * (next - position).array()) * std::exp(env.r_f);
            position = next;
            value = batch.prices.col(t + 1).cwiseProduct(position) + cash;
        }
        Eigen::VectorXd returns(rows);
        for (Eigen::Index i = 0; i < episodes; ++i) {
            const double s_T = batch.prices(i, horizon);
            const double payout = s_T > env.strike ? s_T - env.strike : 0.0;
            const double r_T = env::reward(-(s_T * position(i) + cash(i) - payout));
            for (int t = 0; t < horizon; ++t) {
                returns(i * horizon + t) = std::pow(c.gamma, horizon - 1 - t) * r_T;
            }
        }
        Eigen::VectorXd advantages = returns - critic.forward(states).col(0);
        const double adv_mean = advantages.mean();
        const double adv_std = std::sqrt((advantages.array() - adv_mean).square().mean());
        advantages = (advantages.array() - adv_mean) / (adv_std > 1e-12 ? adv_std : 1.0);

        std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
        bool stop = false;
        for (int epoch = 0; epoch < c.ppo_epochs && !stop && !sup.exhausted(); ++epoch) {
            std::iota(order.begin(), order.end(), 0);
            for (std::size_t k = order.size(); k > 1; --k) {
                std::swap(order[k - 1], order[shuffle.uniform_index(k)]);
            }
            for (Eigen::Index start = 0; start < rows && !stop && !sup.exhausted(); start += c.batch_size) {
                const Eigen::Index len = std::min<Eigen::Index>(c.batch_size, rows - start);
                const std::vector<Eigen::Index> mb(order.begin() + start, order.begin() + start + len);
                const Eigen::MatrixXd mb_states = states(mb, Eigen::all);

                tape.reset();
                const auto ab = actor.bind(tape);
                const Var ls = tape.leaf(log_std);
                const Var mean_action = actor.forward(ab, tape.constant(mb_states));
                const Var log_prob = gaussian_log_prob(tape.constant(raw_actions(mb)), mean_action, ls);
                const Var ratio = exp(log_prob - tape.constant(old_log_prob(mb)));
                const Eigen::MatrixXd adv = advantages(mb);
                const Var surrogate = min(tape.mul_const(ratio, adv),
                                          tape.mul_const(clip(ratio, 1.0 - c.ppo_clip, 1.0 + c.ppo_clip), adv));
                const Var actor_loss = -mean(surrogate);
                require_finite(actor_loss.scalar(), "PPO actor");
                tape.backward(actor_loss);
                actor_opt.step(actor.parameters(), actor.gradient(tape, ab));
                log_std_opt.step(log_std, tape.adjoint(ls).reshaped());
                log_std(0) = std::clamp(log_std(0), -5.0, 1.0);

                tape.reset();
                const auto cb = critic.bind(tape);
                const Var v = critic.forward(cb, tape.constant(mb_states));
                const Var critic_loss = mean(square(v - tape.constant(returns(mb))));
                require_finite(critic_loss.scalar(), "PPO critic");
                tape.backward(critic_loss);
                critic_opt.step(critic.parameters(), critic.gradient(tape, cb));

                stop = sup.after_update(snapshot);
            }
        }
        if (stop) break;
    }
    return sup.finish(snapshot);
}

}  // namespace

std::vector<double> TrainingTrace::validation_values() const {
    std::vector<double> v;
    v.reserve(validation.size());
    for (const auto& p : validation) v.push_back(p.rsqp);
    return v;
}

double epsilon_at(const AgentConfig& config, std::int64_t updates, std::int64_t budget) {
    const double horizon = config.epsilon_decay_fraction * static_cast<double>(budget);
    if (horizon <= 0.0) {
        return config.epsilon_end;
    }
    const double frac = static_cast<double>(updates) / horizon;
    if (frac >= 1.0) {
        return config.epsilon_end;
    }
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
}

McpgEvaluation mcpg_objective(const Net& actor, const market::PathSet& batch, const env::EnvConfig& env) {
    env.validate();
    env::check_compatible(batch, env);
    const Eigen::Index n = batch.size();
    const int horizon = env.horizon;
    const double accrual = std::exp(env.r_f);
    Tape tape;
    const auto binding = actor.bind(tape);

    Var position = tape.constant(Eigen::MatrixXd::Zero(n, 1));
    Var cash = tape.constant(Eigen::MatrixXd::Constant(n, 1, env.premium));
    Var value = cash;
    Eigen::MatrixXd fixed(n, 2);
    for (int t = 0; t < horizon; ++t) {
        fixed.col(0).setConstant(static_cast<double>(t) / horizon);
        fixed.col(1) = batch.prices.col(t) / env.s0;
        const Var state = hconcat(tape.constant(fixed), value * (1.0 / env.premium));
        const Var next = actor.forward(binding, state);
        const Var cost = tape.mul_const(next - position, batch.prices.col(t));
        cash = (cash - cost) * accrual;
        position = next;
        value = tape.mul_const(position, batch.prices.col(t + 1)) + cash;
    }
    const Eigen::ArrayXd terminal = batch.prices.col(horizon).array();
    const Eigen::MatrixXd payout = (terminal > env.strike).select(terminal - env.strike, 0.0).matrix();
    const Var loss = tape.constant(payout) - value;  // R = -(S_T X_T + M_T - payout)
    const Var objective = sqrt(mean(square(relu(loss))));

    McpgEvaluation out;
    out.objective = objective.scalar();
    tape.backward(objective);
    out.gradient = actor.gradient(tape, binding);
    return out;
}

bool mcpg_update(Net& actor, numcore::Optimizer<double>& optimizer, const market::PathSet& batch,
                 const env::EnvConfig& env) {
    const McpgEvaluation eval = mcpg_objective(actor, batch, env);
    require_finite(eval.objective, "MCPG");
    if (eval.objective == 0.0) {
        return false;
    }
    optimizer.step(actor.parameters(), eval.gradient);
    return true;
}

TrainResult train(const AgentConfig& config, const env::EnvConfig& env, const market::PathSet& train_set,
                  const market::PathSet& validation, const TrainOptions& options) {
    config.validate();
    env.validate();
    env::check_compatible(train_set, env);
    env::check_compatible(validation, env);
    if (options.budget < 0) {
        throw ConfigError("train: budget must be non-negative");
    }
    keep_large_blocks_on_heap();
    TrainResult result;
    Supervisor sup(env, validation, options, result.trace);
    const auto started = std::chrono::steady_clock::now();
    try {
        switch (config.algorithm) {
            case Algorithm::Mcpg:
                result.policy = train_mcpg(config, env, train_set, options, sup, result.trace);
                break;
            case Algorithm::Dql:
            case Algorithm::DoubleDql:
            case Algorithm::DuelingDql:
            case Algorithm::DdDql:
                result.policy = train_dql(config, env, train_set, options, sup);
                break;
            case Algorithm::Ddpg:
            case Algorithm::Td3:
                result.policy = train_actor_critic(config, env, train_set, options, sup);
                break;
            case Algorithm::Ppo:
                result.policy = train_ppo(config, env, train_set, options, sup);
                break;
        }
    } catch (const DivergenceError& e) {
        result.trace.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        throw TrainingDivergedError(std::string("training diverged: ") + e.what(), result.trace);
    }
    result.trace.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace hedgebench::agents

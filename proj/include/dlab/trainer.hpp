#pragma once

#include "dlab/critic.hpp"
#include "dlab/episode.hpp"
#include "dlab/policy.hpp"
#include "dlab/rng.hpp"
#include "dlab/sim.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace dlab {

enum class CriticTargetMode { monte_carlo, temporal_difference };

struct TrainConfig {
    int n_train_episodes = 30;
    int n_test_episodes = 10;
    int max_iters = 100;
    double gamma = 0.99;
    double alpha_gain = 1e-5;   // step size for the K_R / K_V heads
    double alpha_tf = 1e-4;     // step size for the T_f head
    double grad_clip = 0.0;     // clip gradient norm when > 0
    double eps_stop = 0.0;      // early stop threshold on test-cost drift; 0 disables
    int stop_window = 5;        // number of consecutive test-cost diffs averaged
    CriticTargetMode critic_mode = CriticTargetMode::monte_carlo;
    ValueFitConfig critic;
    EpisodeOptions episode;
    CostWeights cost;
    LanderState nominal;        // dispersion center; m should be the wet mass
    InitialDispersion dispersion;
    TargetState target;
    uint64_t seed = 0;
};

struct IterationLog {
    int iter = 0;
    double mean_train_cost = 0.0;
    double mean_test_cost = 0.0;
    double min_cost = 0.0;        // best train episode this iteration
    double violation_frac = 0.0;  // train episodes ended by impact
    double critic_train_nrmse = 0.0;
    double critic_test_nrmse = 0.0;
    double grad_norm = 0.0;       // before clipping
    double wall_s = 0.0;
};

struct TrainResult {
    PolicyParams policy;
    ValueModel critic;
    ValueFitReport critic_report;
    std::vector<IterationLog> log;
    bool stopped_early = false;
    int iters_run = 0;
};

using IterationCallback = std::function<void(const IterationLog&)>;

// Every episode gets its own counter-derived stream so the draw layout is a
// pure function of (seed, iteration, episode index) regardless of batch size.
inline RandomStream train_episode_stream(uint64_t seed, int iter, int episode) {
    return derive_stream(seed, {1u, static_cast<uint64_t>(iter), static_cast<uint64_t>(episode)});
}
inline RandomStream critic_fit_stream(uint64_t seed, int iter) {
    return derive_stream(seed, {2u, static_cast<uint64_t>(iter)});
}
inline RandomStream test_episode_stream(uint64_t seed, int iter, int episode) {
    return derive_stream(seed, {3u, static_cast<uint64_t>(iter), static_cast<uint64_t>(episode)});
}

// Mean cumulative cost of the deterministic (head-mean) policy over the
// dispersed initial-condition set for this iteration.
inline double mean_test_cost(const PolicyParams& pp, const TrainConfig& cfg,
                             const SpacecraftParams& sc, const Environment& env, int iter) {
    double sum = 0.0;
    for (int j = 0; j < cfg.n_test_episodes; ++j) {
        RandomStream rs = test_episode_stream(cfg.seed, iter, j);
        const LanderState x0 = sample_initial_state(cfg.nominal, cfg.dispersion, rs);
        const EpisodeRecord ep =
            run_episode(x0, cfg.target, pp, cfg.cost, sc, env, cfg.episode, nullptr);
        sum += ep.cumulative_cost;
    }
    return sum / cfg.n_test_episodes;
}

struct PolicyGradient {
    Eigen::VectorXd g_KR, g_KV, g_Tf;
    double norm() const {
        return std::sqrt(g_KR.squaredNorm() + g_KV.squaredNorm() + g_Tf.squaredNorm());
    }
};

// Batch-mean advantage-weighted score gradient. Per-step advantages drive the
// gain heads; the time-of-flight head is credited with the advantage at the
// initial state, since T_f is drawn once per episode.
inline PolicyGradient policy_gradient(const std::vector<EpisodeRecord>& eps,
                                      const std::vector<std::vector<double>>& returns,
                                      const ValueModel& critic, int feature_dim) {
    if (eps.size() != returns.size())
        throw std::invalid_argument("policy_gradient: batch size mismatch");
    PolicyGradient g{Eigen::VectorXd::Zero(feature_dim), Eigen::VectorXd::Zero(feature_dim),
                     Eigen::VectorXd::Zero(feature_dim)};
    if (eps.empty()) return g;
    for (size_t i = 0; i < eps.size(); ++i) {
        const auto& ep = eps[i];
        std::vector<double> v(ep.samples.size());
        for (size_t t = 0; t < ep.samples.size(); ++t)
            v[t] = critic.value(ep.samples[t].state, ep.samples[t].t_go);
        const std::vector<double> adv = advantages(returns[i], v);
        for (size_t t = 0; t < ep.samples.size(); ++t) {
            g.g_KR += adv[t] * ep.samples[t].grad_KR;
            g.g_KV += adv[t] * ep.samples[t].grad_KV;
        }
        if (!ep.samples.empty()) g.g_Tf += adv[0] * ep.grad_Tf;
    }
    const double n = static_cast<double>(eps.size());
    g.g_KR /= n;
    g.g_KV /= n;
    g.g_Tf /= n;
    return g;
}

// One actor-critic iteration: sample a batch of stochastic episodes, refit the
// value model on their discounted returns (or bootstrapped targets), form the
// advantage-weighted score gradient, and take a descent step on all heads.
inline IterationLog train_iteration(PolicyParams& pp, ValueModel& critic, bool critic_ready,
                                    const TrainConfig& cfg, const SpacecraftParams& sc,
                                    const Environment& env, int iter,
                                    ValueFitReport* report_out) {
    const auto t_start = std::chrono::steady_clock::now();
    IterationLog log;
    log.iter = iter;

    std::vector<EpisodeRecord> eps;
    eps.reserve(cfg.n_train_episodes);
    double cost_sum = 0.0;
    double cost_min = 0.0;
    int n_violations = 0;
    for (int e = 0; e < cfg.n_train_episodes; ++e) {
        RandomStream rs = train_episode_stream(cfg.seed, iter, e);
        const LanderState x0 = sample_initial_state(cfg.nominal, cfg.dispersion, rs);
        EpisodeRecord ep = run_episode(x0, cfg.target, pp, cfg.cost, sc, env, cfg.episode, &rs);
        cost_sum += ep.cumulative_cost;
        cost_min = (e == 0) ? ep.cumulative_cost : std::min(cost_min, ep.cumulative_cost);
        if (ep.ended == EpisodeEnd::impact) ++n_violations;
        eps.push_back(std::move(ep));
    }
    log.mean_train_cost = cost_sum / cfg.n_train_episodes;
    log.min_cost = cost_min;
    log.violation_frac = static_cast<double>(n_violations) / cfg.n_train_episodes;

    // Assemble the critic dataset over every visited state.
    int n_samples = 0;
    for (const auto& ep : eps) n_samples += static_cast<int>(ep.samples.size());
    Eigen::MatrixXd X(n_samples, kCriticInputDim);
    Eigen::VectorXd y(n_samples);
    std::vector<std::vector<double>> returns(eps.size());
    int row = 0;
    for (size_t i = 0; i < eps.size(); ++i) {
        const auto& ep = eps[i];
        const std::vector<double> costs = ep.effective_step_costs();
        returns[i] = discounted_returns(costs, cfg.gamma);
        std::vector<double> targets;
        if (cfg.critic_mode == CriticTargetMode::monte_carlo) {
            targets = returns[i];
        } else {
            std::vector<double> v_next(costs.size(), 0.0);
            if (critic_ready)
                for (size_t t = 0; t + 1 < ep.samples.size(); ++t)
                    v_next[t] = critic.value(ep.samples[t].next_state, ep.samples[t].t_go_next);
            targets = td_targets(costs, v_next, cfg.gamma);
        }
        for (size_t t = 0; t < ep.samples.size(); ++t, ++row) {
            X.row(row) = critic_input(ep.samples[t].state, ep.samples[t].t_go).transpose();
            y(row) = targets[t];
        }
    }

    RandomStream crs = critic_fit_stream(cfg.seed, iter);
    ValueFitReport rep;
    critic = fit_value_model(X, y, cfg.critic, crs, &rep);
    log.critic_train_nrmse = rep.nrmse_train;
    log.critic_test_nrmse = rep.nrmse_test;
    if (report_out) *report_out = rep;

    PolicyGradient g = policy_gradient(eps, returns, critic, pp.rbf.feature_dim());
    log.grad_norm = g.norm();
    if (cfg.grad_clip > 0.0 && log.grad_norm > cfg.grad_clip) {
        const double s = cfg.grad_clip / log.grad_norm;
        g.g_KR *= s;
        g.g_KV *= s;
        g.g_Tf *= s;
    }
    pp.theta_KR -= cfg.alpha_gain * g.g_KR;
    pp.theta_KV -= cfg.alpha_gain * g.g_KV;
    pp.theta_Tf -= cfg.alpha_tf * g.g_Tf;

    log.mean_test_cost = mean_test_cost(pp, cfg, sc, env, iter);
    log.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return log;
}

// Full training run. Stops early when the test cost settles: the mean absolute
// change over the last `stop_window` iterations falls below eps_stop.
inline TrainResult train(const PolicyParams& initial, const TrainConfig& cfg,
                         const SpacecraftParams& sc, const Environment& env,
                         const IterationCallback& on_iteration = {}) {
    sc.validate();
    env.validate();
    cfg.cost.validate();
    initial.validate();

    TrainResult res;
    res.policy = initial;
    bool critic_ready = false;
    std::vector<double> test_costs;
    for (int it = 0; it < cfg.max_iters; ++it) {
        IterationLog log = train_iteration(res.policy, res.critic, critic_ready, cfg, sc, env,
                                           it, &res.critic_report);
        critic_ready = true;
        res.log.push_back(log);
        res.iters_run = it + 1;
        if (on_iteration) on_iteration(log);

        test_costs.push_back(log.mean_test_cost);
        if (cfg.eps_stop > 0.0 &&
            static_cast<int>(test_costs.size()) >= cfg.stop_window + 1) {
            double drift = 0.0;
            const size_t n = test_costs.size();
            for (int k = 0; k < cfg.stop_window; ++k)
                drift += std::abs(test_costs[n - 1 - k] - test_costs[n - 2 - k]);
            drift /= cfg.stop_window;
            if (drift < cfg.eps_stop) {
                res.stopped_early = true;
                break;
            }
        }
    }
    return res;
}

}  // namespace dlab

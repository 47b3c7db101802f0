#pragma once

#include "dlab/guidance.hpp"
#include "dlab/policy.hpp"
#include "dlab/rng.hpp"
#include "dlab/sim.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace dlab {

// Running + terminal cost weights. Failure penalties satisfy b_i > b_f > 0 so
// that crashing is always worse than any soft landing.
struct CostWeights {
    double w_fuel = 0.5;        // per-step, times kg burned
    double w_pos_final = 0.1;   // terminal position error squared
    double w_vel_final = 0.1;   // terminal velocity error squared
    double w_pos_impact = 5e-4; // impact miss distance squared
    double b_impact = 100.0;
    double b_final = 10.0;

    void validate() const {
        if (!(b_impact > b_final) || !(b_final > 0.0))
            throw std::invalid_argument("CostWeights: need b_impact > b_final > 0");
        if (w_fuel < 0.0 || w_pos_final < 0.0 || w_vel_final < 0.0 || w_pos_impact < 0.0)
            throw std::invalid_argument("CostWeights: negative weight");
    }
};

inline double final_cost(const LanderState& x, const TargetState& target,
                         const CostWeights& cw) {
    return cw.w_pos_final * (x.r - target.r_f).squaredNorm() +
           cw.w_vel_final * (x.v - target.v_f).squaredNorm() + cw.b_final;
}

inline double impact_cost(const Vec3& impact_point, const TargetState& target,
                          const CostWeights& cw) {
    return cw.w_pos_impact * (impact_point - target.r_f).squaredNorm() + cw.b_impact;
}

// Uniform box dispersion around a nominal state. All six draws are consumed
// even for zero half-widths so the stream layout never depends on the bounds.
struct InitialDispersion {
    Vec3 pos_halfwidth = Vec3::Zero();
    Vec3 vel_halfwidth = Vec3::Zero();
    bool gaussian = false;  // treat halfwidths as standard deviations instead
};

inline LanderState sample_initial_state(const LanderState& nominal,
                                        const InitialDispersion& d, RandomStream& rng) {
    LanderState x = nominal;
    if (d.gaussian) {
        for (int i = 0; i < 3; ++i) x.r(i) += d.pos_halfwidth(i) * rng.normal();
        for (int i = 0; i < 3; ++i) x.v(i) += d.vel_halfwidth(i) * rng.normal();
    } else {
        for (int i = 0; i < 3; ++i)
            x.r(i) += rng.uniform(-d.pos_halfwidth(i), d.pos_halfwidth(i));
        for (int i = 0; i < 3; ++i)
            x.v(i) += rng.uniform(-d.vel_halfwidth(i), d.vel_halfwidth(i));
    }
    return x;
}

// touchdown = surface contact over the flat landing disc (the goal state);
// impact = terrain contact anywhere else, charged the crash penalty.
enum class EpisodeEnd { final_time, touchdown, impact, fuel_exhausted };

inline const char* to_string(EpisodeEnd e) {
    switch (e) {
        case EpisodeEnd::final_time: return "final_time";
        case EpisodeEnd::touchdown: return "touchdown";
        case EpisodeEnd::impact: return "impact";
        case EpisodeEnd::fuel_exhausted: return "fuel_exhausted";
    }
    return "?";
}

// One control interval of a training episode.
struct EpisodeSample {
    LanderState state;       // at interval start
    double t_go = 0.0;
    GuidanceGains gains;     // executed gains (sampled or mean)
    double step_cost = 0.0;  // running cost over this interval
    LanderState next_state;
    double t_go_next = 0.0;
    Eigen::VectorXd grad_KR;  // policy score terms, zero for deterministic runs
    Eigen::VectorXd grad_KV;
};

struct EpisodeRecord {
    std::vector<EpisodeSample> samples;
    double T_f = 0.0;             // executed time of flight
    Eigen::VectorXd grad_Tf;      // score of the T_f draw (at the initial state)
    EpisodeEnd ended = EpisodeEnd::final_time;
    double terminal_cost = 0.0;
    double cumulative_cost = 0.0; // sum of step costs + terminal cost
    LanderState final_state;
    double fuel_burned = 0.0;
    bool saturated = false;

    // Per-step costs with the terminal cost folded into the last interval;
    // this is the sequence discounted-return targets are built from.
    std::vector<double> effective_step_costs() const {
        std::vector<double> c;
        c.reserve(samples.size());
        for (const auto& s : samples) c.push_back(s.step_cost);
        if (!c.empty()) c.back() += terminal_cost;
        return c;
    }
};

struct EpisodeOptions {
    int n_steps = 60;
    int n_substeps = 10;
    ZemZevStrategy strategy = ZemZevStrategy::constant_g;
    bool check_terrain = true;
};

// Rolls out one episode under the policy. With rng the action heads are
// sampled (one T_f normal up front, then two gain normals per step) and the
// score gradients recorded; without rng the head means are used and all
// gradients are zero. Impact and fuel exhaustion both end the episode early
// with penalty b_impact; impact adds the miss-distance term.
inline EpisodeRecord run_episode(const LanderState& x0, const TargetState& target,
                                 const PolicyParams& pp, const CostWeights& cw,
                                 const SpacecraftParams& sc, const Environment& env,
                                 const EpisodeOptions& opt, RandomStream* rng) {
    cw.validate();
    pp.validate();
    EpisodeRecord ep;

    const Eigen::VectorXd phi0 = features(x0, pp.rbf);
    if (rng) {
        const TofSample ts = sample_tof(phi0, pp, *rng);
        ep.T_f = ts.T_f;
        ep.grad_Tf = ts.grad_Tf;
    } else {
        ep.T_f = mean_tof(phi0, pp);
        ep.grad_Tf = Eigen::VectorXd::Zero(phi0.size());
    }

    const double dt = ep.T_f / opt.n_steps;
    StepOptions sopt;
    sopt.n_substeps = opt.n_substeps;
    sopt.check_terrain = opt.check_terrain;

    LanderState cur = x0;
    Vec3 held_cmd = Vec3::Zero();
    GuidanceGains held_gains;
    for (int k = 0; k < opt.n_steps; ++k) {
        const double t_go = ep.T_f - (cur.t - x0.t);
        EpisodeSample smp;
        smp.state = cur;
        smp.t_go = t_go;

        if (t_go >= 0.5 * dt) {
            const Eigen::VectorXd phi = features(cur, pp.rbf);
            GainSample gs = rng ? sample_gains(phi, pp, *rng) : mean_gains(phi, pp);
            held_gains = GuidanceGains{gs.K_R, gs.K_V, ep.T_f};
            smp.grad_KR = std::move(gs.grad_KR);
            smp.grad_KV = std::move(gs.grad_KV);
            const ZemZev zz = (opt.strategy == ZemZevStrategy::constant_g)
                                  ? zemzev_constant_g(cur, target, t_go, env.g)
                                  : zemzev_no_control(cur, target, t_go, sc, env);
            held_cmd = generalized_accel(zz, held_gains, t_go, dt);
        } else {
            smp.grad_KR = Eigen::VectorXd::Zero(phi0.size());
            smp.grad_KV = Eigen::VectorXd::Zero(phi0.size());
        }
        smp.gains = held_gains;

        const StepResult sr = step(cur, held_cmd, dt, sc, env, sopt);
        smp.step_cost = cw.w_fuel * sr.fuel_burned;
        smp.next_state = sr.next_state;
        smp.t_go_next = ep.T_f - (sr.next_state.t - x0.t);
        ep.fuel_burned += sr.fuel_burned;
        ep.saturated = ep.saturated || sr.thrust_saturated;
        ep.samples.push_back(std::move(smp));
        cur = sr.next_state;

        if (sr.terrain_violation) {
            if (over_landing_pad(*sr.impact_point, env)) {
                ep.ended = EpisodeEnd::touchdown;
                ep.terminal_cost = final_cost(cur, target, cw);
            } else {
                ep.ended = EpisodeEnd::impact;
                ep.terminal_cost = impact_cost(*sr.impact_point, target, cw);
            }
            break;
        }
        if (sr.fuel_exhausted) {
            ep.ended = EpisodeEnd::fuel_exhausted;
            ep.terminal_cost = cw.b_impact;
            break;
        }
    }
    if (ep.ended == EpisodeEnd::final_time) ep.terminal_cost = final_cost(cur, target, cw);
    ep.final_state = cur;
    for (const auto& s : ep.samples) ep.cumulative_cost += s.step_cost;
    ep.cumulative_cost += ep.terminal_cost;
    return ep;
}

}  // namespace dlab

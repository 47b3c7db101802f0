#pragma once

#include "dlab/guidance.hpp"
#include "dlab/sim.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace dlab {

enum class ZemZevStrategy { constant_g, no_control };

// One control interval of a flown descent, recorded at the interval start.
struct TrajectoryStep {
    double t = 0.0;
    double t_go = 0.0;
    LanderState state;
    double K_R = 0.0;
    double K_V = 0.0;
    ZemZev zz;
    Vec3 a_cmd = Vec3::Zero();
    double thrust_mag = 0.0;
    double clearance = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    LanderState final_state;
    double T_f = 0.0;
    double fuel_burned = 0.0;
    bool violated = false;        // terrain crossed away from the landing pad
    bool saturated = false;       // thrust clamp active at any point
    bool fuel_exhausted = false;
    std::optional<Vec3> impact_point;
    bool terminated_early = false;  // stopped at impact (terminate_on_impact mode)

    double final_pos_error(const TargetState& target) const {
        return (final_state.r - target.r_f).norm();
    }
    double final_vel_error(const TargetState& target) const {
        return (final_state.v - target.v_f).norm();
    }
    // Energy of the piecewise-constant command profile, sum |a_k|^2 dt_k.
    double control_energy() const {
        double e = 0.0;
        for (size_t i = 0; i < steps.size(); ++i) {
            const double t_end = (i + 1 < steps.size()) ? steps[i + 1].t : final_state.t;
            e += steps[i].a_cmd.squaredNorm() * (t_end - steps[i].t);
        }
        return e;
    }
};

struct FlightOptions {
    int n_steps = 60;
    int n_substeps = 10;
    // terminate_on_impact=true stops the descent at the interpolated impact
    // point; false lets the trajectory pass through the surface and only
    // flags the violation (how the classical law is usually inspected).
    bool terminate_on_impact = false;
    bool check_terrain = true;
    ZemZevStrategy strategy = ZemZevStrategy::constant_g;
};

// Per-step gain schedule; adaptive policies key on the state and t_go.
using GainSchedule = std::function<GuidanceGains(const LanderState&, double /*t_go*/)>;

inline GainSchedule fixed_gains(const GuidanceGains& g) {
    return [g](const LanderState&, double) { return g; };
}

// Flies one closed-loop descent of duration T_f with n_steps zero-order-hold
// control intervals. The command is recomputed from the actual state at each
// interval start; once t_go falls below one interval the last command is held.
inline Trajectory fly(const LanderState& x0, const TargetState& target, double T_f,
                      const GainSchedule& gains, const SpacecraftParams& sc,
                      const Environment& env, const FlightOptions& opt = {}) {
    if (!(T_f > 0.0)) throw std::invalid_argument("fly: T_f must be positive");
    if (opt.n_steps < 1) throw std::invalid_argument("fly: n_steps must be >= 1");

    const double dt = T_f / opt.n_steps;
    StepOptions sopt;
    sopt.n_substeps = opt.n_substeps;
    sopt.check_terrain = opt.check_terrain && opt.terminate_on_impact;

    Trajectory traj;
    traj.T_f = T_f;
    LanderState cur = x0;
    Vec3 held_cmd = Vec3::Zero();

    for (int k = 0; k < opt.n_steps; ++k) {
        const double t_go = T_f - (cur.t - x0.t);
        TrajectoryStep rec;
        rec.t = cur.t;
        rec.t_go = t_go;
        rec.state = cur;
        rec.clearance = terrain_clearance(cur.r, env);
        if (opt.check_terrain && rec.clearance < 0.0 && !over_landing_pad(cur.r, env))
            traj.violated = true;

        if (t_go >= 0.5 * dt) {
            const GuidanceGains g = gains(cur, t_go);
            rec.K_R = g.K_R;
            rec.K_V = g.K_V;
            rec.zz = (opt.strategy == ZemZevStrategy::constant_g)
                         ? zemzev_constant_g(cur, target, t_go, env.g)
                         : zemzev_no_control(cur, target, t_go, sc, env);
            held_cmd = generalized_accel(rec.zz, g, t_go, dt);
        } else if (!traj.steps.empty()) {
            rec.K_R = traj.steps.back().K_R;
            rec.K_V = traj.steps.back().K_V;
        }
        rec.a_cmd = held_cmd;

        StepResult sr = step(cur, held_cmd, dt, sc, env, sopt);
        rec.thrust_mag = sr.applied_thrust.norm();
        traj.steps.push_back(rec);

        traj.fuel_burned += sr.fuel_burned;
        traj.saturated = traj.saturated || sr.thrust_saturated;
        traj.fuel_exhausted = traj.fuel_exhausted || sr.fuel_exhausted;
        if (sr.terrain_violation) {
            traj.violated = !over_landing_pad(*sr.impact_point, env);
            traj.impact_point = sr.impact_point;
            traj.final_state = sr.next_state;
            traj.terminated_early = true;
            return traj;
        }
        cur = sr.next_state;
    }
    if (opt.check_terrain && terrain_clearance(cur.r, env) < 0.0 &&
        !over_landing_pad(cur.r, env))
        traj.violated = true;
    traj.final_state = cur;
    return traj;
}

}  // namespace dlab

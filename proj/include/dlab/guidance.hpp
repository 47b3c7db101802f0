#pragma once

#include "dlab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dlab {

// Feedback gains of the generalized ZEM/ZEV law plus the flight time they
// were drawn for. The classical energy-optimal law is (K_R, K_V) = (6, -2).
struct GuidanceGains {
    double K_R = 6.0;
    double K_V = -2.0;
    double T_f = 80.0;  // s
};

struct TargetState {
    Vec3 r_f = Vec3::Zero();
    Vec3 v_f = Vec3::Zero();
};

// Miss vectors: where the uncontrolled ballistic arc ends up relative to the
// target at the final time.
struct ZemZev {
    Vec3 zem = Vec3::Zero();  // m
    Vec3 zev = Vec3::Zero();  // m/s
};

// Analytic ZEM/ZEV for a uniform gravity field.
inline ZemZev zemzev_constant_g(const LanderState& state, const TargetState& target,
                                double t_go, const Vec3& g) {
    if (!(t_go > 0.0)) throw std::invalid_argument("zemzev_constant_g: t_go must be positive");
    ZemZev zz;
    zz.zem = target.r_f - state.r - t_go * state.v - 0.5 * t_go * t_go * g;
    zz.zev = target.v_f - state.v - t_go * g;
    return zz;
}

// ZEM/ZEV by ballistic propagation of the actual dynamics (thrust forced to
// zero, terrain ignored). Selectable strategy for fields where the analytic
// form does not apply; identical to the constant-g form when g is uniform.
inline ZemZev zemzev_no_control(const LanderState& state, const TargetState& target,
                                double t_go, const SpacecraftParams& sc,
                                const Environment& env, double dt_prop = 0.5) {
    if (!(t_go > 0.0)) throw std::invalid_argument("zemzev_no_control: t_go must be positive");
    StepOptions opt;
    opt.force_zero_thrust = true;
    opt.check_terrain = false;
    LanderState cur = state;
    double remaining = t_go;
    while (remaining > 0.0) {
        const double dt = std::min(dt_prop, remaining);
        cur = step(cur, Vec3::Zero(), dt, sc, env, opt).next_state;
        if (!cur.finite()) throw std::runtime_error("zemzev_no_control: propagation diverged");
        remaining -= dt;
    }
    return ZemZev{target.r_f - cur.r, target.v_f - cur.v};
}

// a = (K_R / t_go^2) ZEM + (K_V / t_go) ZEV. t_go is floored at t_go_floor to
// keep the terminal 1/t_go^2 finite; callers hold the last command once t_go
// drops below one control interval.
inline Vec3 generalized_accel(const ZemZev& zz, const GuidanceGains& gains,
                              double t_go, double t_go_floor) {
    if (!(t_go_floor > 0.0))
        throw std::invalid_argument("generalized_accel: t_go_floor must be positive");
    const double tg = std::max(t_go, t_go_floor);
    return (gains.K_R / (tg * tg)) * zz.zem + (gains.K_V / tg) * zz.zev;
}

// Energy-optimal special case of the generalized law.
inline Vec3 classical_accel(const ZemZev& zz, double t_go, double t_go_floor) {
    return generalized_accel(zz, GuidanceGains{6.0, -2.0, 0.0}, t_go, t_go_floor);
}

constexpr GuidanceGains classical_gains(double T_f) { return GuidanceGains{6.0, -2.0, T_f}; }

}  // namespace dlab

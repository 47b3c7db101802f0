#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>

namespace dlab {

using Vec3 = Eigen::Vector3d;

constexpr double kStandardGravity = 9.80665;  // m/s^2

// Lander point-mass state. z is altitude above the target plane (z-up frame,
// origin at the landing target).
struct LanderState {
    Vec3 r = Vec3::Zero();   // position, m
    Vec3 v = Vec3::Zero();   // velocity, m/s
    double m = 0.0;          // mass, kg
    double t = 0.0;          // elapsed time, s

    bool finite() const {
        return r.allFinite() && v.allFinite() && std::isfinite(m) && std::isfinite(t);
    }
};

struct SpacecraftParams {
    double m_dry = 1505.0;        // kg
    double m_wet = 1905.0;        // kg
    double I_sp = 225.0;          // s
    double T_bar = 3100.0;        // N, single-thruster full throttle
    double throttle_min = 0.3;
    double throttle_max = 0.8;
    int n_thrusters = 6;
    double cant_angle = 27.0 * M_PI / 180.0;  // rad
    double g0 = kStandardGravity;

    // Net bounds after cant-angle losses; all thrusters throttle together.
    double net_thrust_min() const {
        return n_thrusters * throttle_min * T_bar * std::cos(cant_angle);
    }
    double net_thrust_max() const {
        return n_thrusters * throttle_max * T_bar * std::cos(cant_angle);
    }

    void validate() const {
        if (!(throttle_min > 0.0 && throttle_min < throttle_max && throttle_max <= 1.0))
            throw std::invalid_argument("spacecraft: need 0 < throttle_min < throttle_max <= 1");
        if (!(m_dry < m_wet))
            throw std::invalid_argument("spacecraft: need m_dry < m_wet");
        if (!(std::cos(cant_angle) > 0.0))
            throw std::invalid_argument("spacecraft: need cos(cant_angle) > 0");
        if (!(I_sp > 0.0 && T_bar > 0.0 && n_thrusters > 0 && g0 > 0.0))
            throw std::invalid_argument("spacecraft: I_sp, T_bar, n_thrusters, g0 must be positive");
    }
};

// Terrain is a cone of constant slope around the target with a flat disk of
// radius flat_radius at the center.
struct Environment {
    Vec3 g = Vec3(0.0, 0.0, -3.7114);        // m/s^2
    double slope_angle = 4.0 * M_PI / 180.0; // rad
    double flat_radius = 5.0;                // m
    double glide_limit = 4.0 * M_PI / 180.0; // rad

    void validate() const {
        if (!(g.z() < 0.0))
            throw std::invalid_argument("environment: gravity must point downward (g.z < 0)");
        if (!(slope_angle > 0.0 && slope_angle < M_PI / 2.0))
            throw std::invalid_argument("environment: slope_angle out of (0, pi/2)");
        if (!(glide_limit > 0.0 && glide_limit < M_PI / 2.0))
            throw std::invalid_argument("environment: glide_limit out of (0, pi/2)");
        if (!(flat_radius >= 0.0))
            throw std::invalid_argument("environment: flat_radius must be >= 0");
    }
};

struct StepResult {
    LanderState next_state;
    Vec3 applied_thrust = Vec3::Zero();  // N, thrust at the start of the step
    double fuel_burned = 0.0;            // kg, exact sum of per-sub-step depletion
    bool thrust_saturated = false;
    bool fuel_exhausted = false;
    bool terrain_violation = false;
    std::optional<Vec3> impact_point;
};

struct StepOptions {
    int n_substeps = 10;
    bool force_zero_thrust = false;  // ballistic propagation (ZEM/ZEV "no control")
    bool check_terrain = true;
};

// Signed height above the terrain surface; negative means violation.
inline double terrain_clearance(const Vec3& r, const Environment& env) {
    const double rho = std::hypot(r.x(), r.y());
    return r.z() - std::tan(env.slope_angle) * std::max(0.0, rho - env.flat_radius);
}

// Whether a point is over the flat landing disc. Ground contact there is a
// touchdown, not a constraint violation; the surface is the destination.
inline bool over_landing_pad(const Vec3& r, const Environment& env) {
    return std::hypot(r.x(), r.y()) <= env.flat_radius;
}

// Net thrust realizing acceleration command a_cmd at the current mass.
// Magnitude is clamped to the net-thrust envelope, direction preserved.
// A zero command cannot be realized (the engines cannot shut off), so it maps
// to vertical thrust at the lower bound.
inline Vec3 acceleration_to_thrust(const Vec3& a_cmd, const LanderState& state,
                                   const SpacecraftParams& sc,
                                   bool* saturated = nullptr) {
    if (!a_cmd.allFinite())
        throw std::invalid_argument("acceleration_to_thrust: non-finite command");
    const double t_min = sc.net_thrust_min();
    const double t_max = sc.net_thrust_max();
    const Vec3 desired = state.m * a_cmd;
    const double mag = desired.norm();
    if (mag == 0.0) {
        if (saturated) *saturated = true;
        return Vec3(0.0, 0.0, t_min);
    }
    if (mag < t_min) {
        if (saturated) *saturated = true;
        return desired * (t_min / mag);
    }
    if (mag > t_max) {
        if (saturated) *saturated = true;
        return desired * (t_max / mag);
    }
    if (saturated) *saturated = false;
    return desired;
}

namespace detail {

// One RK4 sub-step under a frozen thrust vector (r, v, m together).
inline LanderState rk4_substep(const LanderState& s, const Vec3& thrust, double h,
                               const SpacecraftParams& sc, const Environment& env) {
    const double mdot = -thrust.norm() / (sc.I_sp * sc.g0);
    auto acc = [&](double m) { return Vec3(env.g + thrust / m); };

    const Vec3 k1r = s.v;
    const Vec3 k1v = acc(s.m);
    const Vec3 k2r = s.v + 0.5 * h * k1v;
    const Vec3 k2v = acc(s.m + 0.5 * h * mdot);
    const Vec3 k3r = s.v + 0.5 * h * k2v;
    const Vec3 k3v = acc(s.m + 0.5 * h * mdot);
    const Vec3 k4r = s.v + h * k3v;
    const Vec3 k4v = acc(s.m + h * mdot);

    LanderState out;
    out.r = s.r + (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
    out.v = s.v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    out.m = s.m + h * mdot;
    out.t = s.t + h;
    return out;
}

}  // namespace detail

// Advances the state by dt under a zero-order-hold acceleration command.
// The command is converted to thrust at the start of every sub-step (so the
// thrust tracks the depleting mass) and the thrust vector is held constant
// across the sub-step; mass depletion within a sub-step is therefore linear
// and the fuel bookkeeping in StepResult is exact.
//
// If depletion would push the mass below m_dry the thrust is cut to zero for
// the remainder of the step and fuel_exhausted is set. Terrain is checked
// after every sub-step; on a crossing the step is truncated at the impact
// point (located by bisection to 1e-6 m).
inline StepResult step(const LanderState& state, const Vec3& a_cmd, double dt,
                       const SpacecraftParams& sc, const Environment& env,
                       const StepOptions& opt = {}) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    if (!state.finite()) throw std::invalid_argument("step: non-finite state");
    if (!a_cmd.allFinite()) throw std::invalid_argument("step: non-finite command");
    if (opt.n_substeps < 1) throw std::invalid_argument("step: n_substeps must be >= 1");

    StepResult res;
    res.next_state = state;

    if (opt.check_terrain && terrain_clearance(state.r, env) < 0.0) {
        res.terrain_violation = true;
        res.impact_point = state.r;
        return res;
    }

    const double h = dt / opt.n_substeps;
    bool exhausted = false;

    for (int k = 0; k < opt.n_substeps; ++k) {
        const LanderState& cur = res.next_state;

        Vec3 thrust = Vec3::Zero();
        if (!opt.force_zero_thrust && !exhausted) {
            bool sat = false;
            thrust = acceleration_to_thrust(a_cmd, cur, sc, &sat);
            const double dm = thrust.norm() * h / (sc.I_sp * sc.g0);
            if (cur.m - dm < sc.m_dry) {
                thrust = Vec3::Zero();
                exhausted = true;
            } else if (sat) {
                res.thrust_saturated = true;
            }
        }
        if (k == 0) res.applied_thrust = thrust;

        LanderState next = detail::rk4_substep(cur, thrust, h, sc, env);
        if (!next.finite()) throw std::runtime_error("step: integration diverged");
        res.fuel_burned += cur.m - next.m;

        if (opt.check_terrain && terrain_clearance(next.r, env) < 0.0) {
            // Bisect the sub-step for the crossing; keep the non-violating end.
            double lo = 0.0, hi = h;
            LanderState lo_state = cur, hi_state = next;
            while ((hi - lo) * cur.v.norm() > 1e-6 && hi - lo > 1e-12) {
                const double mid = 0.5 * (lo + hi);
                LanderState ms = detail::rk4_substep(cur, thrust, mid, sc, env);
                if (terrain_clearance(ms.r, env) < 0.0) {
                    hi = mid;
                    hi_state = ms;
                } else {
                    lo = mid;
                    lo_state = ms;
                }
            }
            res.fuel_burned += next.m - lo_state.m;  // undo the truncated remainder
            res.next_state = lo_state;
            res.terrain_violation = true;
            res.impact_point = lo_state.r;
            res.fuel_exhausted = exhausted;
            return res;
        }
        res.next_state = next;
    }

    res.fuel_exhausted = exhausted;
    return res;
}

}  // namespace dlab

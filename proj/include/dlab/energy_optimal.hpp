#pragma once

#include "dlab/guidance.hpp"
#include "dlab/sim.hpp"

#include <cmath>
#include <stdexcept>

namespace dlab {

// Closed-form solution of the unconstrained energy-optimal descent under
// uniform gravity: minimize (1/2) int |a|^2 dt with both endpoints fixed.
// The optimal command is linear in time-to-go, a(t) = u * t_go + w, with the
// coefficients fixed by the boundary conditions. Used as the analytic
// benchmark row in comparisons and as the oracle for the feedback law's
// energy-optimality checks.
struct EnergyOptimalSolution {
    Vec3 u = Vec3::Zero();  // slope w.r.t. t_go, m/s^3
    Vec3 w = Vec3::Zero();  // constant part, m/s^2
    LanderState x0;
    TargetState target;
    double T = 0.0;  // flight time, s
    Vec3 g = Vec3::Zero();

    Vec3 accel_at(double t) const {
        const double t_go = T - (t - x0.t);
        return u * t_go + w;
    }

    // State along the optimal arc (exact polynomial propagation).
    LanderState state_at(double t) const {
        const double th = t - x0.t;  // time since start
        LanderState s;
        s.t = t;
        s.m = x0.m;  // mass handled separately by callers that need it
        s.v = x0.v + th * g + 0.5 * (T * T - (T - th) * (T - th)) * u + th * w;
        s.r = x0.r + th * x0.v + 0.5 * th * th * g +
              (0.5 * th * th * T - th * th * th / 6.0) * u + 0.5 * th * th * w;
        return s;
    }

    // int_0^T |a|^2 dt, closed form for the linear-in-t_go command.
    double control_energy() const {
        return u.squaredNorm() * T * T * T / 3.0 + u.dot(w) * T * T + w.squaredNorm() * T;
    }

    // int_0^T |a| dt via composite Simpson; |a(t)| has no elementary
    // antiderivative worth carrying around.
    double accel_norm_integral(int n_panels = 2000) const {
        const int n = 2 * std::max(1, n_panels / 2);
        const double h = T / n;
        double sum = accel_at(x0.t).norm() + accel_at(x0.t + T).norm();
        for (int i = 1; i < n; ++i)
            sum += (i % 2 ? 4.0 : 2.0) * accel_at(x0.t + i * h).norm();
        return sum * h / 3.0;
    }
};

inline EnergyOptimalSolution solve_energy_optimal(const LanderState& x0,
                                                  const TargetState& target,
                                                  double T, const Vec3& g) {
    if (!(T > 0.0)) throw std::invalid_argument("solve_energy_optimal: T must be positive");
    EnergyOptimalSolution sol;
    sol.x0 = x0;
    sol.target = target;
    sol.T = T;
    sol.g = g;
    const ZemZev zz0 = zemzev_constant_g(x0, target, T, g);
    sol.u = (12.0 * zz0.zem - 6.0 * T * zz0.zev) / (T * T * T);
    sol.w = (4.0 * T * zz0.zev - 6.0 * zz0.zem) / (T * T);
    return sol;
}

}  // namespace dlab

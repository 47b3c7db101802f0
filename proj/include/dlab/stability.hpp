#pragma once

#include "dlab/flight.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace dlab {

// Closed-loop error dynamics of the generalized feedback law, per axis, in
// the (position error, velocity error * t_f) coordinates.
//
// The time-varying system x' = A(t_go) x becomes autonomous in the stretched
// time tau = -log(t_go / t_f): x' = R x with constant R. Stability over the
// whole descent is then an eigenvalue condition on R.

inline Eigen::Matrix2d ltv_matrix(double K_R, double K_V, double t_go) {
    if (!(t_go > 0.0)) throw std::invalid_argument("ltv_matrix: t_go must be positive");
    Eigen::Matrix2d A;
    A << -K_R / t_go, -K_V, -K_R / (t_go * t_go), -K_V / t_go;
    return A;
}

inline Eigen::Matrix2d lti_matrix(double K_R, double K_V, double t_f) {
    if (!(t_f > 0.0)) throw std::invalid_argument("lti_matrix: t_f must be positive");
    Eigen::Matrix2d R;
    R << -K_R, -K_V * t_f, -K_R / t_f, -(K_V + 1.0);
    return R;
}

enum class StabilityStatus { stable, marginal, unstable };

inline const char* to_string(StabilityStatus s) {
    switch (s) {
        case StabilityStatus::stable: return "stable";
        case StabilityStatus::marginal: return "marginal";
        case StabilityStatus::unstable: return "unstable";
    }
    return "?";
}

struct EigenCheck {
    std::complex<double> lambda1;  // larger real part first
    std::complex<double> lambda2;
    double K = 0.0;            // = K_R + K_V + 1, the trace is -K
    double discriminant = 0.0; // K^2 - 4 K_R
    StabilityStatus status = StabilityStatus::unstable;
    double max_real = 0.0;
};

// Roots of lambda^2 + K lambda + K_R with K = K_R + K_V + 1.
inline EigenCheck eigen_check(double K_R, double K_V) {
    EigenCheck ec;
    ec.K = K_R + K_V + 1.0;
    ec.discriminant = ec.K * ec.K - 4.0 * K_R;
    if (ec.discriminant >= 0.0) {
        // Large-magnitude root from the non-cancelling branch, the other from
        // the product identity lambda1 * lambda2 = K_R.
        const double s = std::sqrt(ec.discriminant);
        const double q = -0.5 * (ec.K + (ec.K >= 0.0 ? s : -s));
        const double other = (q != 0.0) ? K_R / q : 0.0;
        ec.lambda1 = {std::max(q, other), 0.0};
        ec.lambda2 = {std::min(q, other), 0.0};
    } else {
        const double s = std::sqrt(-ec.discriminant);
        ec.lambda1 = {-ec.K / 2.0, s / 2.0};
        ec.lambda2 = {-ec.K / 2.0, -s / 2.0};
    }
    ec.max_real = std::max(ec.lambda1.real(), ec.lambda2.real());
    constexpr double tol = 1e-12;
    if (ec.max_real < -tol)
        ec.status = StabilityStatus::stable;
    else if (ec.max_real <= tol)
        ec.status = StabilityStatus::marginal;
    else
        ec.status = StabilityStatus::unstable;
    return ec;
}

// State-transition matrix of the time-domain error dynamics from descent
// start (rho = 1) down to rho = t_go / t_f, closed form in the eigenvalues of
// the stretched-time system: dPhi/dt = A(t_go) Phi with Phi(rho = 1) = I.
// Equivalently Phi(rho) = diag(1, 1/rho) * exp(R * tau).
inline Eigen::Matrix2d stm(double K_R, double K_V, double t_f, double rho) {
    if (!(t_f > 0.0)) throw std::invalid_argument("stm: t_f must be positive");
    if (!(rho > 0.0) || !(rho <= 1.0 + 1e-12))
        throw std::invalid_argument("stm: rho must lie in (0, 1]");
    using C = std::complex<double>;
    const EigenCheck ec = eigen_check(K_R, K_V);
    const C l1 = ec.lambda1, l2 = ec.lambda2;
    const double ln_rho = std::log(rho);
    Eigen::Matrix2d Phi;
    if (std::abs(l1 - l2) < 1e-9) {
        // Repeated root lambda = -K/2: limits of the generic expressions.
        const double l = -ec.K / 2.0;
        const double p = std::pow(rho, -l);        // rho^{-lambda}
        const double pm = std::pow(rho, -l - 1.0); // rho^{-lambda-1}
        Phi(0, 0) = p * (1.0 + (l + K_R) * ln_rho);
        Phi(0, 1) = K_V * t_f * p * ln_rho;
        Phi(1, 0) = K_R * pm * ln_rho / t_f;
        Phi(1, 1) = pm * (1.0 - (l + K_R) * ln_rho);
        return Phi;
    }
    const C a1 = l1 + K_R, a2 = l2 + K_R;
    const C D = l1 - l2;
    auto powr = [ln_rho](const C& e) { return std::exp(e * ln_rho); };  // rho^e
    const C r_m1 = powr(-l1), r_m2 = powr(-l2);
    const C r_m1m = powr(-l1 - 1.0), r_m2m = powr(-l2 - 1.0);
    Phi(0, 0) = ((a1 * r_m2 - a2 * r_m1) / D).real();
    Phi(0, 1) = (K_V * t_f * (r_m2 - r_m1) / D).real();
    Phi(1, 0) = (-K_R * (r_m1m - r_m2m) / (t_f * D)).real();
    Phi(1, 1) = ((a1 * r_m1m - a2 * r_m2m) / D).real();
    return Phi;
}

// Same matrix indexed by stretched time tau = -log(rho).
inline Eigen::Matrix2d stm_tau(double K_R, double K_V, double t_f, double tau) {
    if (tau < 0.0) throw std::invalid_argument("stm_tau: tau must be >= 0");
    return stm(K_R, K_V, t_f, std::exp(-tau));
}

// det Phi = rho^(K_R + K_V) exactly: Liouville with tr A = -(K_R + K_V)/t_go
// integrated over the descent. A cheap internal consistency probe.
inline double stm_det_expected(double K_R, double K_V, double rho) {
    return std::pow(rho, K_R + K_V);
}

struct StabilityPoint {
    double t = 0.0;
    double t_go = 0.0;
    double K_R = 0.0;
    double K_V = 0.0;
    EigenCheck eig;
    Eigen::Matrix2d Phi = Eigen::Matrix2d::Identity();
};

// Pointwise analysis along a flown trajectory: each control interval's gains
// are checked as a frozen LTI system, and the error STM is evaluated at that
// interval's normalized time to go.
inline std::vector<StabilityPoint> stability_report(const Trajectory& traj) {
    std::vector<StabilityPoint> out;
    out.reserve(traj.steps.size());
    for (const auto& s : traj.steps) {
        StabilityPoint p;
        p.t = s.t;
        p.t_go = s.t_go;
        p.K_R = s.K_R;
        p.K_V = s.K_V;
        p.eig = eigen_check(s.K_R, s.K_V);
        const double rho = std::min(1.0, std::max(1e-12, s.t_go / traj.T_f));
        p.Phi = stm(s.K_R, s.K_V, traj.T_f, rho);
        out.push_back(p);
    }
    return out;
}

}  // namespace dlab

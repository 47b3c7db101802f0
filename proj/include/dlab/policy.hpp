#pragma once

#include "dlab/flight.hpp"
#include "dlab/guidance.hpp"
#include "dlab/rng.hpp"
#include "dlab/sim.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dlab {

// Gaussian radial-basis feature map over position and velocity, plus a bias
// term. Position and velocity get separate center sets and widths.
struct RbfConfig {
    std::vector<Vec3> pos_centers;
    std::vector<Vec3> vel_centers;
    double beta_pos = 0.0;  // exponent scale, phi = exp(-beta |x - c|^2)
    double beta_vel = 0.0;

    int feature_dim() const {
        return static_cast<int>(pos_centers.size() + vel_centers.size()) + 1;
    }

    void validate() const {
        if (pos_centers.empty() || vel_centers.empty())
            throw std::invalid_argument("RbfConfig: empty center set");
        if (!(beta_pos > 0.0) || !(beta_vel > 0.0))
            throw std::invalid_argument("RbfConfig: beta must be positive");
    }
};

// Uniform n x n x n grid of centers over an axis-aligned box.
inline std::vector<Vec3> make_grid_centers(const Vec3& lo, const Vec3& hi, int n_per_axis) {
    if (n_per_axis < 1) throw std::invalid_argument("make_grid_centers: n_per_axis < 1");
    std::vector<Vec3> out;
    out.reserve(static_cast<size_t>(n_per_axis) * n_per_axis * n_per_axis);
    auto coord = [&](double a, double b, int i) {
        if (n_per_axis == 1) return 0.5 * (a + b);
        return a + (b - a) * static_cast<double>(i) / (n_per_axis - 1);
    };
    for (int i = 0; i < n_per_axis; ++i)
        for (int j = 0; j < n_per_axis; ++j)
            for (int k = 0; k < n_per_axis; ++k)
                out.push_back(Vec3(coord(lo.x(), hi.x(), i), coord(lo.y(), hi.y(), j),
                                   coord(lo.z(), hi.z(), k)));
    return out;
}

// Width heuristic: beta = 1/(2 d^2) where d is the mean per-axis center
// spacing, so neighbouring bumps overlap at about exp(-1/2).
inline double grid_beta(const Vec3& lo, const Vec3& hi, int n_per_axis) {
    if (n_per_axis < 2) {
        const double span = (hi - lo).norm();
        const double d = span > 0.0 ? span : 1.0;
        return 1.0 / (2.0 * d * d);
    }
    const double d = (hi - lo).sum() / (3.0 * (n_per_axis - 1));
    if (!(d > 0.0)) throw std::invalid_argument("grid_beta: degenerate bounds");
    return 1.0 / (2.0 * d * d);
}

inline RbfConfig make_rbf_grid(const Vec3& pos_lo, const Vec3& pos_hi, const Vec3& vel_lo,
                               const Vec3& vel_hi, int n_per_axis = 5) {
    RbfConfig rbf;
    rbf.pos_centers = make_grid_centers(pos_lo, pos_hi, n_per_axis);
    rbf.vel_centers = make_grid_centers(vel_lo, vel_hi, n_per_axis);
    rbf.beta_pos = grid_beta(pos_lo, pos_hi, n_per_axis);
    rbf.beta_vel = grid_beta(vel_lo, vel_hi, n_per_axis);
    return rbf;
}

// Feature vector [phi_pos; phi_vel; 1].
inline Eigen::VectorXd features(const Vec3& r, const Vec3& v, const RbfConfig& rbf) {
    Eigen::VectorXd phi(rbf.feature_dim());
    int idx = 0;
    for (const Vec3& c : rbf.pos_centers)
        phi(idx++) = std::exp(-rbf.beta_pos * (r - c).squaredNorm());
    for (const Vec3& c : rbf.vel_centers)
        phi(idx++) = std::exp(-rbf.beta_vel * (v - c).squaredNorm());
    phi(idx) = 1.0;
    return phi;
}

inline Eigen::VectorXd features(const LanderState& x, const RbfConfig& rbf) {
    return features(x.r, x.v, rbf);
}

// Stochastic policy: three independent Gaussian heads (K_R, K_V, T_f) whose
// means are linear in the shared feature vector. Sigmas are fixed, not learned.
struct PolicyParams {
    RbfConfig rbf;
    Eigen::VectorXd theta_KR;
    Eigen::VectorXd theta_KV;
    Eigen::VectorXd theta_Tf;
    double sigma_gain = 0.3;
    double sigma_Tf = 2.0;
    double tf_min = 1.0;
    double tf_max = 300.0;

    void validate() const {
        rbf.validate();
        const int d = rbf.feature_dim();
        if (theta_KR.size() != d || theta_KV.size() != d || theta_Tf.size() != d)
            throw std::invalid_argument("PolicyParams: theta size != feature dim");
        if (!(tf_min > 0.0) || !(tf_max > tf_min))
            throw std::invalid_argument("PolicyParams: bad T_f bounds");
    }
};

// Start from the hand-tuned fixed law: bias weight carries the whole mean.
inline PolicyParams warm_start_policy(const RbfConfig& rbf, const GuidanceGains& g0,
                                      double tof_nominal) {
    PolicyParams pp;
    pp.rbf = rbf;
    const int d = rbf.feature_dim();
    pp.theta_KR = Eigen::VectorXd::Zero(d);
    pp.theta_KV = Eigen::VectorXd::Zero(d);
    pp.theta_Tf = Eigen::VectorXd::Zero(d);
    pp.theta_KR(d - 1) = g0.K_R;
    pp.theta_KV(d - 1) = g0.K_V;
    pp.theta_Tf(d - 1) = tof_nominal;
    return pp;
}

struct GainSample {
    double K_R = 0.0;
    double K_V = 0.0;
    Eigen::VectorXd grad_KR;  // d log pi / d theta_KR at the sampled action
    Eigen::VectorXd grad_KV;
};

struct TofSample {
    double T_f = 0.0;
    Eigen::VectorXd grad_Tf;
};

inline double clamp_tof(double tf, const PolicyParams& pp) {
    return std::min(pp.tf_max, std::max(pp.tf_min, tf));
}

inline GainSample mean_gains(const Eigen::VectorXd& phi, const PolicyParams& pp) {
    GainSample s;
    s.K_R = pp.theta_KR.dot(phi);
    s.K_V = pp.theta_KV.dot(phi);
    s.grad_KR = Eigen::VectorXd::Zero(phi.size());
    s.grad_KV = Eigen::VectorXd::Zero(phi.size());
    return s;
}

inline double mean_tof(const Eigen::VectorXd& phi, const PolicyParams& pp) {
    return clamp_tof(pp.theta_Tf.dot(phi), pp);
}

// Draws K_R then K_V (two normal variates, in that order). The score of a
// Gaussian-mean head is (u - mu)/sigma^2 * phi.
inline GainSample sample_gains(const Eigen::VectorXd& phi, const PolicyParams& pp,
                               RandomStream& rng) {
    GainSample s = mean_gains(phi, pp);
    if (pp.sigma_gain <= 0.0) return s;
    const double mu_R = s.K_R;
    const double mu_V = s.K_V;
    s.K_R = mu_R + pp.sigma_gain * rng.normal();
    s.K_V = mu_V + pp.sigma_gain * rng.normal();
    const double inv_var = 1.0 / (pp.sigma_gain * pp.sigma_gain);
    s.grad_KR = (s.K_R - mu_R) * inv_var * phi;
    s.grad_KV = (s.K_V - mu_V) * inv_var * phi;
    return s;
}

// One normal variate. The draw is clamped to the flyable range; the score is
// evaluated at the clamped (executed) value.
inline TofSample sample_tof(const Eigen::VectorXd& phi, const PolicyParams& pp,
                            RandomStream& rng) {
    TofSample s;
    const double mu = pp.theta_Tf.dot(phi);
    if (pp.sigma_Tf <= 0.0) {
        s.T_f = clamp_tof(mu, pp);
        s.grad_Tf = Eigen::VectorXd::Zero(phi.size());
        return s;
    }
    s.T_f = clamp_tof(mu + pp.sigma_Tf * rng.normal(), pp);
    s.grad_Tf = (s.T_f - mu) / (pp.sigma_Tf * pp.sigma_Tf) * phi;
    return s;
}

// --- JSON round trip -------------------------------------------------------

inline nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x,y,z]");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

inline nlohmann::json to_json(const RbfConfig& rbf) {
    nlohmann::json j;
    j["beta_pos"] = rbf.beta_pos;
    j["beta_vel"] = rbf.beta_vel;
    j["pos_centers"] = nlohmann::json::array();
    for (const Vec3& c : rbf.pos_centers) j["pos_centers"].push_back(to_json(c));
    j["vel_centers"] = nlohmann::json::array();
    for (const Vec3& c : rbf.vel_centers) j["vel_centers"].push_back(to_json(c));
    return j;
}

inline RbfConfig rbf_from_json(const nlohmann::json& j) {
    RbfConfig rbf;
    rbf.beta_pos = j.at("beta_pos").get<double>();
    rbf.beta_vel = j.at("beta_vel").get<double>();
    for (const auto& c : j.at("pos_centers")) rbf.pos_centers.push_back(vec3_from_json(c));
    for (const auto& c : j.at("vel_centers")) rbf.vel_centers.push_back(vec3_from_json(c));
    rbf.validate();
    return rbf;
}

inline nlohmann::json to_json(const PolicyParams& pp) {
    nlohmann::json j;
    j["rbf"] = to_json(pp.rbf);
    j["theta_KR"] = to_json(pp.theta_KR);
    j["theta_KV"] = to_json(pp.theta_KV);
    j["theta_Tf"] = to_json(pp.theta_Tf);
    j["sigma_gain"] = pp.sigma_gain;
    j["sigma_Tf"] = pp.sigma_Tf;
    j["tf_min"] = pp.tf_min;
    j["tf_max"] = pp.tf_max;
    return j;
}

inline PolicyParams policy_from_json(const nlohmann::json& j) {
    PolicyParams pp;
    pp.rbf = rbf_from_json(j.at("rbf"));
    pp.theta_KR = vector_from_json(j.at("theta_KR"));
    pp.theta_KV = vector_from_json(j.at("theta_KV"));
    pp.theta_Tf = vector_from_json(j.at("theta_Tf"));
    pp.sigma_gain = j.at("sigma_gain").get<double>();
    pp.sigma_Tf = j.at("sigma_Tf").get<double>();
    pp.tf_min = j.at("tf_min").get<double>();
    pp.tf_max = j.at("tf_max").get<double>();
    pp.validate();
    return pp;
}

// Adapts a learned policy to the per-step gain schedule used by fly(): gains
// come from the deterministic head means at the current state.
inline GainSchedule policy_gain_schedule(const PolicyParams& pp) {
    return [pp](const LanderState& x, double) {
        const Eigen::VectorXd phi = features(x, pp.rbf);
        const GainSample s = mean_gains(phi, pp);
        GuidanceGains g;
        g.K_R = s.K_R;
        g.K_V = s.K_V;
        return g;
    };
}

}  // namespace dlab

#pragma once

#include "dlab/episode.hpp"
#include "dlab/flight.hpp"
#include "dlab/guidance.hpp"
#include "dlab/policy.hpp"
#include "dlab/sim.hpp"
#include "dlab/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

namespace dlab {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Feature-map construction knobs; centers are laid out on a uniform grid.
struct PolicySettings {
    int n_per_axis = 5;
    Vec3 pos_lo = Vec3(-1100.0, -1600.0, 0.0);
    Vec3 pos_hi = Vec3(2100.0, 1600.0, 1700.0);
    Vec3 vel_lo = Vec3(-150.0, -150.0, -150.0);
    Vec3 vel_hi = Vec3(150.0, 150.0, 150.0);
    double sigma_gain = 0.3;
    double sigma_Tf = 2.0;
    double tf_min = 5.0;
    double tf_max = 300.0;

    RbfConfig make_rbf() const {
        return make_rbf_grid(pos_lo, pos_hi, vel_lo, vel_hi, n_per_axis);
    }
};

struct TrainSettings {
    int n_train_episodes = 30;
    int n_test_episodes = 10;
    int max_iters = 100;
    double gamma = 0.99;
    double alpha_gain = 1e-5;
    double alpha_tf = 1e-4;
    double grad_clip = 0.0;
    double eps_stop = 0.0;
    int stop_window = 5;
    std::string critic_mode = "mc";  // "mc" or "td"
    int critic_hidden = 0;           // 0 -> automatic
    double critic_test_fraction = 0.2;
};

// Everything that defines a scenario: vehicle, environment, initial set,
// target, baseline guidance, discretization, cost, learning setup.
struct ScenarioConfig {
    std::string name = "mars3d";
    SpacecraftParams spacecraft;
    Environment environment;
    Vec3 r0 = Vec3(-500.0, -1000.0, 1500.0);
    Vec3 v0 = Vec3(100.0, -60.0, -60.0);
    InitialDispersion dispersion{Vec3(500.0, 500.0, 0.0), Vec3(5.0, 5.0, 5.0)};
    TargetState target;
    GuidanceGains guidance;  // classical baseline gains and nominal T_f
    int n_steps = 60;
    int n_substeps = 10;
    std::string strategy = "constant_g";  // or "ballistic"
    CostWeights cost;
    PolicySettings policy;
    TrainSettings train;
    int mc_trials = 1000;

    LanderState nominal_state() const {
        LanderState x;
        x.r = r0;
        x.v = v0;
        x.m = spacecraft.m_wet;
        x.t = 0.0;
        return x;
    }

    ZemZevStrategy zz_strategy() const {
        if (strategy == "constant_g") return ZemZevStrategy::constant_g;
        if (strategy == "ballistic") return ZemZevStrategy::no_control;
        throw std::invalid_argument("unknown strategy '" + strategy + "'");
    }

    FlightOptions flight_options() const {
        FlightOptions o;
        o.n_steps = n_steps;
        o.n_substeps = n_substeps;
        o.strategy = zz_strategy();
        return o;
    }

    EpisodeOptions episode_options() const {
        EpisodeOptions o;
        o.n_steps = n_steps;
        o.n_substeps = n_substeps;
        o.strategy = zz_strategy();
        return o;
    }

    CriticTargetMode critic_mode_enum() const {
        if (train.critic_mode == "mc") return CriticTargetMode::monte_carlo;
        if (train.critic_mode == "td") return CriticTargetMode::temporal_difference;
        throw std::invalid_argument("unknown critic_mode '" + train.critic_mode + "'");
    }

    TrainConfig train_config(uint64_t seed) const {
        TrainConfig tc;
        tc.n_train_episodes = train.n_train_episodes;
        tc.n_test_episodes = train.n_test_episodes;
        tc.max_iters = train.max_iters;
        tc.gamma = train.gamma;
        tc.alpha_gain = train.alpha_gain;
        tc.alpha_tf = train.alpha_tf;
        tc.grad_clip = train.grad_clip;
        tc.eps_stop = train.eps_stop;
        tc.stop_window = train.stop_window;
        tc.critic_mode = critic_mode_enum();
        tc.critic.hidden_count = train.critic_hidden;
        tc.critic.test_fraction = train.critic_test_fraction;
        tc.episode = episode_options();
        tc.cost = cost;
        tc.nominal = nominal_state();
        tc.dispersion = dispersion;
        tc.target = target;
        tc.seed = seed;
        return tc;
    }

    PolicyParams warm_policy() const {
        PolicyParams pp = warm_start_policy(policy.make_rbf(), guidance, guidance.T_f);
        pp.sigma_gain = policy.sigma_gain;
        pp.sigma_Tf = policy.sigma_Tf;
        pp.tf_min = policy.tf_min;
        pp.tf_max = policy.tf_max;
        return pp;
    }

    void validate() const {
        spacecraft.validate();
        environment.validate();
        cost.validate();
        if (n_steps < 1 || n_substeps < 1)
            throw std::invalid_argument("config: n_steps and n_substeps must be >= 1");
        if (!(guidance.T_f > 0.0)) throw std::invalid_argument("config: guidance.T_f <= 0");
        if (mc_trials < 1) throw std::invalid_argument("config: mc_trials < 1");
        zz_strategy();
        critic_mode_enum();
    }
};

namespace detail {
inline Vec3 get_vec3(const nlohmann::json& j, const char* key, const Vec3& dflt) {
    if (!j.contains(key)) return dflt;
    return vec3_from_json(j.at(key));
}
}  // namespace detail

inline nlohmann::json to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["spacecraft"] = {{"m_dry", c.spacecraft.m_dry},
                       {"m_wet", c.spacecraft.m_wet},
                       {"I_sp", c.spacecraft.I_sp},
                       {"T_bar", c.spacecraft.T_bar},
                       {"throttle_min", c.spacecraft.throttle_min},
                       {"throttle_max", c.spacecraft.throttle_max},
                       {"n_thrusters", c.spacecraft.n_thrusters},
                       {"cant_angle_deg", rad2deg(c.spacecraft.cant_angle)}};
    j["environment"] = {{"g", to_json(c.environment.g)},
                        {"slope_angle_deg", rad2deg(c.environment.slope_angle)},
                        {"flat_radius", c.environment.flat_radius},
                        {"glide_limit_deg", rad2deg(c.environment.glide_limit)}};
    j["initial"] = {{"r", to_json(c.r0)},
                    {"v", to_json(c.v0)},
                    {"pos_halfwidth", to_json(c.dispersion.pos_halfwidth)},
                    {"vel_halfwidth", to_json(c.dispersion.vel_halfwidth)},
                    {"gaussian", c.dispersion.gaussian}};
    j["target"] = {{"r_f", to_json(c.target.r_f)}, {"v_f", to_json(c.target.v_f)}};
    j["guidance"] = {{"K_R", c.guidance.K_R},
                     {"K_V", c.guidance.K_V},
                     {"T_f", c.guidance.T_f},
                     {"n_steps", c.n_steps},
                     {"n_substeps", c.n_substeps},
                     {"strategy", c.strategy}};
    j["cost"] = {{"w_fuel", c.cost.w_fuel},
                 {"w_pos_final", c.cost.w_pos_final},
                 {"w_vel_final", c.cost.w_vel_final},
                 {"w_pos_impact", c.cost.w_pos_impact},
                 {"b_impact", c.cost.b_impact},
                 {"b_final", c.cost.b_final}};
    j["policy"] = {{"n_per_axis", c.policy.n_per_axis},
                   {"pos_lo", to_json(c.policy.pos_lo)},
                   {"pos_hi", to_json(c.policy.pos_hi)},
                   {"vel_lo", to_json(c.policy.vel_lo)},
                   {"vel_hi", to_json(c.policy.vel_hi)},
                   {"sigma_gain", c.policy.sigma_gain},
                   {"sigma_Tf", c.policy.sigma_Tf},
                   {"tf_min", c.policy.tf_min},
                   {"tf_max", c.policy.tf_max}};
    j["train"] = {{"n_train_episodes", c.train.n_train_episodes},
                  {"n_test_episodes", c.train.n_test_episodes},
                  {"max_iters", c.train.max_iters},
                  {"gamma", c.train.gamma},
                  {"alpha_gain", c.train.alpha_gain},
                  {"alpha_tf", c.train.alpha_tf},
                  {"grad_clip", c.train.grad_clip},
                  {"eps_stop", c.train.eps_stop},
                  {"stop_window", c.train.stop_window},
                  {"critic_mode", c.train.critic_mode},
                  {"critic_hidden", c.train.critic_hidden},
                  {"critic_test_fraction", c.train.critic_test_fraction}};
    j["montecarlo"] = {{"n_trials", c.mc_trials}};
    return j;
}

// Missing keys keep their defaults; unknown keys are ignored.
inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    c.name = j.value("name", c.name);
    if (j.contains("spacecraft")) {
        const auto& s = j.at("spacecraft");
        c.spacecraft.m_dry = s.value("m_dry", c.spacecraft.m_dry);
        c.spacecraft.m_wet = s.value("m_wet", c.spacecraft.m_wet);
        c.spacecraft.I_sp = s.value("I_sp", c.spacecraft.I_sp);
        c.spacecraft.T_bar = s.value("T_bar", c.spacecraft.T_bar);
        c.spacecraft.throttle_min = s.value("throttle_min", c.spacecraft.throttle_min);
        c.spacecraft.throttle_max = s.value("throttle_max", c.spacecraft.throttle_max);
        c.spacecraft.n_thrusters = s.value("n_thrusters", c.spacecraft.n_thrusters);
        if (s.contains("cant_angle_deg"))
            c.spacecraft.cant_angle = deg2rad(s.at("cant_angle_deg").get<double>());
    }
    if (j.contains("environment")) {
        const auto& e = j.at("environment");
        c.environment.g = detail::get_vec3(e, "g", c.environment.g);
        if (e.contains("slope_angle_deg"))
            c.environment.slope_angle = deg2rad(e.at("slope_angle_deg").get<double>());
        c.environment.flat_radius = e.value("flat_radius", c.environment.flat_radius);
        if (e.contains("glide_limit_deg"))
            c.environment.glide_limit = deg2rad(e.at("glide_limit_deg").get<double>());
    }
    if (j.contains("initial")) {
        const auto& i = j.at("initial");
        c.r0 = detail::get_vec3(i, "r", c.r0);
        c.v0 = detail::get_vec3(i, "v", c.v0);
        c.dispersion.pos_halfwidth =
            detail::get_vec3(i, "pos_halfwidth", c.dispersion.pos_halfwidth);
        c.dispersion.vel_halfwidth =
            detail::get_vec3(i, "vel_halfwidth", c.dispersion.vel_halfwidth);
        c.dispersion.gaussian = i.value("gaussian", c.dispersion.gaussian);
    }
    if (j.contains("target")) {
        const auto& t = j.at("target");
        c.target.r_f = detail::get_vec3(t, "r_f", c.target.r_f);
        c.target.v_f = detail::get_vec3(t, "v_f", c.target.v_f);
    }
    if (j.contains("guidance")) {
        const auto& g = j.at("guidance");
        c.guidance.K_R = g.value("K_R", c.guidance.K_R);
        c.guidance.K_V = g.value("K_V", c.guidance.K_V);
        c.guidance.T_f = g.value("T_f", c.guidance.T_f);
        c.n_steps = g.value("n_steps", c.n_steps);
        c.n_substeps = g.value("n_substeps", c.n_substeps);
        c.strategy = g.value("strategy", c.strategy);
    }
    if (j.contains("cost")) {
        const auto& w = j.at("cost");
        c.cost.w_fuel = w.value("w_fuel", c.cost.w_fuel);
        c.cost.w_pos_final = w.value("w_pos_final", c.cost.w_pos_final);
        c.cost.w_vel_final = w.value("w_vel_final", c.cost.w_vel_final);
        c.cost.w_pos_impact = w.value("w_pos_impact", c.cost.w_pos_impact);
        c.cost.b_impact = w.value("b_impact", c.cost.b_impact);
        c.cost.b_final = w.value("b_final", c.cost.b_final);
    }
    if (j.contains("policy")) {
        const auto& p = j.at("policy");
        c.policy.n_per_axis = p.value("n_per_axis", c.policy.n_per_axis);
        c.policy.pos_lo = detail::get_vec3(p, "pos_lo", c.policy.pos_lo);
        c.policy.pos_hi = detail::get_vec3(p, "pos_hi", c.policy.pos_hi);
        c.policy.vel_lo = detail::get_vec3(p, "vel_lo", c.policy.vel_lo);
        c.policy.vel_hi = detail::get_vec3(p, "vel_hi", c.policy.vel_hi);
        c.policy.sigma_gain = p.value("sigma_gain", c.policy.sigma_gain);
        c.policy.sigma_Tf = p.value("sigma_Tf", c.policy.sigma_Tf);
        c.policy.tf_min = p.value("tf_min", c.policy.tf_min);
        c.policy.tf_max = p.value("tf_max", c.policy.tf_max);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        c.train.n_train_episodes = t.value("n_train_episodes", c.train.n_train_episodes);
        c.train.n_test_episodes = t.value("n_test_episodes", c.train.n_test_episodes);
        c.train.max_iters = t.value("max_iters", c.train.max_iters);
        c.train.gamma = t.value("gamma", c.train.gamma);
        c.train.alpha_gain = t.value("alpha_gain", c.train.alpha_gain);
        c.train.alpha_tf = t.value("alpha_tf", c.train.alpha_tf);
        c.train.grad_clip = t.value("grad_clip", c.train.grad_clip);
        c.train.eps_stop = t.value("eps_stop", c.train.eps_stop);
        c.train.stop_window = t.value("stop_window", c.train.stop_window);
        c.train.critic_mode = t.value("critic_mode", c.train.critic_mode);
        c.train.critic_hidden = t.value("critic_hidden", c.train.critic_hidden);
        c.train.critic_test_fraction =
            t.value("critic_test_fraction", c.train.critic_test_fraction);
    }
    if (j.contains("montecarlo"))
        c.mc_trials = j.at("montecarlo").value("n_trials", c.mc_trials);
    c.validate();
    return c;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

// FNV-1a over the canonical (sorted-key, compact) serialization, so the hash
// pins the resolved configuration rather than the file's formatting.
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash(const ScenarioConfig& c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
    return buf;
}

}  // namespace dlab

#pragma once

#include "dlab/config.hpp"
#include "dlab/flight.hpp"
#include "dlab/policy.hpp"
#include "dlab/stability.hpp"
#include "dlab/trainer.hpp"
#include "dlab/version.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlab {

// Shortest decimal form that parses back to the identical double, so CSV
// emission is lossless and deterministic. Negative zero is normalized away.
inline std::string fmt_g(double v) {
    if (v == 0.0) return "0";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open output file '" + path.string() + "'");
    return f;
}

inline void write_csv_row(std::ofstream& f, const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) f << ',';
        f << cells[i];
    }
    f << '\n';
}

// --- trajectory ------------------------------------------------------------

inline const char* trajectory_csv_header() {
    return "t,t_go,r_x,r_y,r_z,v_x,v_y,v_z,m,a_x,a_y,a_z,thrust_mag,K_R,K_V,"
           "zem_x,zem_y,zem_z,zev_x,zev_y,zev_z,clearance";
}

// Every control-interval record plus one closing row for the final state.
inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                                 const Environment& env) {
    std::ofstream f = open_out(path);
    f << trajectory_csv_header() << '\n';
    auto row = [&](double t, double t_go, const LanderState& x, const Vec3& a, double thrust,
                   double kr, double kv, const ZemZev& zz, double clr) {
        write_csv_row(f, {fmt_g(t), fmt_g(t_go), fmt_g(x.r.x()), fmt_g(x.r.y()),
                          fmt_g(x.r.z()), fmt_g(x.v.x()), fmt_g(x.v.y()), fmt_g(x.v.z()),
                          fmt_g(x.m), fmt_g(a.x()), fmt_g(a.y()), fmt_g(a.z()), fmt_g(thrust),
                          fmt_g(kr), fmt_g(kv), fmt_g(zz.zem.x()), fmt_g(zz.zem.y()),
                          fmt_g(zz.zem.z()), fmt_g(zz.zev.x()), fmt_g(zz.zev.y()),
                          fmt_g(zz.zev.z()), fmt_g(clr)});
    };
    for (const auto& s : traj.steps)
        row(s.t, s.t_go, s.state, s.a_cmd, s.thrust_mag, s.K_R, s.K_V, s.zz, s.clearance);
    const auto& fs = traj.final_state;
    const double t0 = traj.steps.empty() ? fs.t : traj.steps.front().t;
    const double kr = traj.steps.empty() ? 0.0 : traj.steps.back().K_R;
    const double kv = traj.steps.empty() ? 0.0 : traj.steps.back().K_V;
    row(fs.t, traj.T_f - (fs.t - t0), fs, Vec3::Zero(), 0.0, kr, kv, ZemZev{},
        terrain_clearance(fs.r, env));
}

namespace detail {
inline double parse_csv_double(const std::string& cell, int line_no) {
    const char* s = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw std::runtime_error("trajectory CSV line " + std::to_string(line_no) +
                                 ": bad number '" + cell + "'");
    return v;
}
}  // namespace detail

// Reads back a file written by write_trajectory_csv. The step records and the
// final state are reproduced exactly (the writer is lossless); summary flags
// and the fuel total are recomputed, since the schema does not carry them.
inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory CSV '" + path.string() + "'");
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line))
        throw std::runtime_error("trajectory CSV line 1: missing header");
    ++line_no;
    if (line != trajectory_csv_header())
        throw std::runtime_error("trajectory CSV line 1: unexpected header '" + line + "'");

    std::vector<TrajectoryStep> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 22)
            throw std::runtime_error("trajectory CSV line " + std::to_string(line_no) +
                                     ": expected 22 fields, got " +
                                     std::to_string(cells.size()));
        auto num = [&](size_t i) { return detail::parse_csv_double(cells[i], line_no); };
        TrajectoryStep s;
        s.t = num(0);
        s.t_go = num(1);
        s.state.r = Vec3(num(2), num(3), num(4));
        s.state.v = Vec3(num(5), num(6), num(7));
        s.state.m = num(8);
        s.state.t = s.t;
        s.a_cmd = Vec3(num(9), num(10), num(11));
        s.thrust_mag = num(12);
        s.K_R = num(13);
        s.K_V = num(14);
        s.zz.zem = Vec3(num(15), num(16), num(17));
        s.zz.zev = Vec3(num(18), num(19), num(20));
        s.clearance = num(21);
        rows.push_back(std::move(s));
    }
    if (rows.empty())
        throw std::runtime_error("trajectory CSV: no data rows");

    Trajectory traj;
    traj.final_state = rows.back().state;
    rows.pop_back();
    traj.steps = std::move(rows);
    if (!traj.steps.empty()) {
        traj.T_f = traj.steps.front().t_go;  // first record always sits at t_go = T_f
        traj.fuel_burned = traj.steps.front().state.m - traj.final_state.m;
    }
    return traj;
}

// --- training log ----------------------------------------------------------

inline const char* training_log_csv_header() {
    return "iter,mean_train_cost,mean_test_cost,min_cost,violation_frac,"
           "critic_train_nrmse,critic_test_nrmse,grad_norm,wall_s";
}

inline void append_training_log_row(std::ofstream& f, const IterationLog& l) {
    write_csv_row(f, {std::to_string(l.iter), fmt_g(l.mean_train_cost),
                      fmt_g(l.mean_test_cost), fmt_g(l.min_cost), fmt_g(l.violation_frac),
                      fmt_g(l.critic_train_nrmse), fmt_g(l.critic_test_nrmse),
                      fmt_g(l.grad_norm), fmt_g(l.wall_s)});
}

inline void write_training_log_csv(const std::filesystem::path& path,
                                   const std::vector<IterationLog>& log) {
    std::ofstream f = open_out(path);
    f << training_log_csv_header() << '\n';
    for (const auto& l : log) append_training_log_row(f, l);
}

// --- stability -------------------------------------------------------------

inline const char* stability_csv_header() {
    return "t,t_go,K_R,K_V,re_lambda1,im_lambda1,re_lambda2,im_lambda2,stable,"
           "phi11,phi12,phi21,phi22";
}

inline void write_stability_csv(const std::filesystem::path& path,
                                const std::vector<StabilityPoint>& pts) {
    std::ofstream f = open_out(path);
    f << stability_csv_header() << '\n';
    for (const auto& p : pts) {
        const int stable = p.eig.status == StabilityStatus::stable ? 1 : 0;
        write_csv_row(
            f, {fmt_g(p.t), fmt_g(p.t_go), fmt_g(p.K_R), fmt_g(p.K_V),
                fmt_g(p.eig.lambda1.real()), fmt_g(p.eig.lambda1.imag()),
                fmt_g(p.eig.lambda2.real()), fmt_g(p.eig.lambda2.imag()),
                std::to_string(stable), fmt_g(p.Phi(0, 0)), fmt_g(p.Phi(0, 1)),
                fmt_g(p.Phi(1, 0)), fmt_g(p.Phi(1, 1))});
    }
}

// --- JSON artifacts --------------------------------------------------------

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream f = open_out(path);
    f << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    nlohmann::json j;
    in >> j;
    return j;
}

// Reproducibility stamp dropped next to every command's outputs. Contains no
// wall-clock data, so reruns produce identical bytes.
inline void write_manifest(const std::filesystem::path& dir, const std::string& command,
                           const ScenarioConfig& cfg, uint64_t seed,
                           const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = config_hash(cfg);
    j["scenario"] = cfg.name;
    j["seed"] = seed;
    j["outputs"] = outputs;
    j["versions"] = {{"app", std::string(kAppName) + " " + kAppVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
    write_json_file(dir / "manifest.json", j);
}

// --- policy checkpoint -----------------------------------------------------

constexpr int kCheckpointFormatVersion = 1;

inline void save_policy_checkpoint(const std::filesystem::path& path, const PolicyParams& pp,
                                   const nlohmann::json& meta) {
    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["policy"] = to_json(pp);
    j["meta"] = meta;
    write_json_file(path, j);
}

inline PolicyParams load_policy_checkpoint(const std::filesystem::path& path,
                                           nlohmann::json* meta = nullptr) {
    const nlohmann::json j = read_json_file(path);
    const int ver = j.value("format_version", -1);
    if (ver != kCheckpointFormatVersion)
        throw std::runtime_error("unsupported checkpoint format_version in '" +
                                 path.string() + "'");
    if (meta) *meta = j.value("meta", nlohmann::json::object());
    return policy_from_json(j.at("policy"));
}

}  // namespace dlab

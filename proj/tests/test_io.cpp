#include <dlab/io.hpp>
#include <dlab/rng.hpp>
#include <dlab/svg.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace dlab;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    static const fs::path d = [] {
        fs::path p("io_test_out");
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

Trajectory classical_descent() {
    LanderState x0;
    x0.r = Vec3(1500.0, 0.0, 1500.0);
    x0.v = Vec3(100.0, 0.0, -60.0);
    x0.m = 1905.0;
    return fly(x0, TargetState{}, 80.0, fixed_gains(GuidanceGains{6.0, -2.0, 80.0}),
               SpacecraftParams{}, Environment{});
}

}  // namespace

TEST_CASE("csv float formatting is lossless") {
    REQUIRE(fmt_g(0.0) == "0");
    REQUIRE(fmt_g(-0.0) == "0");
    REQUIRE(fmt_g(1.5) == "1.5");
    REQUIRE(fmt_g(0.1) == "0.1");
    REQUIRE(fmt_g(-3.0) == "-3");

    RandomStream rng(2024);
    for (int i = 0; i < 200; ++i) {
        double v = rng.normal() * std::pow(10.0, rng.uniform(-12.0, 12.0));
        const std::string s = fmt_g(v);
        REQUIRE(std::strtod(s.c_str(), nullptr) == v);
    }
    REQUIRE(std::strtod(fmt_g(1.0 / 3.0).c_str(), nullptr) == 1.0 / 3.0);
}

TEST_CASE("csv schemas are pinned") {
    REQUIRE(std::string(trajectory_csv_header()) ==
            "t,t_go,r_x,r_y,r_z,v_x,v_y,v_z,m,a_x,a_y,a_z,thrust_mag,K_R,K_V,"
            "zem_x,zem_y,zem_z,zev_x,zev_y,zev_z,clearance");
    REQUIRE(std::string(training_log_csv_header()) ==
            "iter,mean_train_cost,mean_test_cost,min_cost,violation_frac,"
            "critic_train_nrmse,critic_test_nrmse,grad_norm,wall_s");
    REQUIRE(std::string(stability_csv_header()) ==
            "t,t_go,K_R,K_V,re_lambda1,im_lambda1,re_lambda2,im_lambda2,stable,"
            "phi11,phi12,phi21,phi22");
}

TEST_CASE("trajectory csv round trip reproduces the trajectory") {
    const Trajectory traj = classical_descent();
    REQUIRE(traj.steps.size() == 60);
    const fs::path p = test_dir() / "roundtrip.csv";
    write_trajectory_csv(p, traj, Environment{});

    const Trajectory back = read_trajectory_csv(p);
    REQUIRE(back.steps.size() == traj.steps.size());
    for (size_t i = 0; i < traj.steps.size(); ++i) {
        const auto& a = traj.steps[i];
        const auto& b = back.steps[i];
        REQUIRE(b.t == a.t);
        REQUIRE(b.t_go == a.t_go);
        REQUIRE(b.state.r == a.state.r);
        REQUIRE(b.state.v == a.state.v);
        REQUIRE(b.state.m == a.state.m);
        REQUIRE(b.state.t == a.state.t);
        REQUIRE(b.K_R == a.K_R);
        REQUIRE(b.K_V == a.K_V);
        REQUIRE(b.a_cmd == a.a_cmd);
        REQUIRE(b.thrust_mag == a.thrust_mag);
        REQUIRE(b.zz.zem == a.zz.zem);
        REQUIRE(b.zz.zev == a.zz.zev);
        REQUIRE(b.clearance == a.clearance);
    }
    REQUIRE(back.final_state.r == traj.final_state.r);
    REQUIRE(back.final_state.v == traj.final_state.v);
    REQUIRE(back.final_state.m == traj.final_state.m);
    REQUIRE(back.final_state.t == traj.final_state.t);
    REQUIRE(back.T_f == traj.T_f);
    REQUIRE(back.fuel_burned == Approx(traj.fuel_burned).margin(1e-9));

    SECTION("a second write from the loaded copy is byte-identical") {
        const fs::path p2 = test_dir() / "roundtrip2.csv";
        write_trajectory_csv(p2, back, Environment{});
        REQUIRE(slurp(p2) == slurp(p));
    }
}

TEST_CASE("trajectory with no steps still writes and loads its final state") {
    Trajectory traj;
    traj.final_state.r = Vec3(1.0, 2.0, 3.0);
    traj.final_state.v = Vec3(-1.0, 0.5, 0.25);
    traj.final_state.m = 1600.0;
    traj.final_state.t = 12.5;
    const fs::path p = test_dir() / "empty.csv";
    write_trajectory_csv(p, traj, Environment{});

    const Trajectory back = read_trajectory_csv(p);
    REQUIRE(back.steps.empty());
    REQUIRE(back.final_state.r == traj.final_state.r);
    REQUIRE(back.final_state.m == traj.final_state.m);
}

TEST_CASE("trajectory csv parse errors carry line numbers") {
    const fs::path dir = test_dir();
    REQUIRE_THROWS_AS(read_trajectory_csv(dir / "does_not_exist.csv"), std::runtime_error);

    const std::string header = trajectory_csv_header();
    spit(dir / "bad_header.csv", "nope\n");
    REQUIRE_THROWS_WITH(read_trajectory_csv(dir / "bad_header.csv"),
                        Catch::Matchers::ContainsSubstring("line 1"));

    spit(dir / "bad_field_count.csv", header + "\n1,2,3\n");
    REQUIRE_THROWS_WITH(read_trajectory_csv(dir / "bad_field_count.csv"),
                        Catch::Matchers::ContainsSubstring("line 2"));

    std::string good_row;
    for (int i = 0; i < 22; ++i) good_row += (i ? ",1" : "1");
    std::string bad_row;
    for (int i = 0; i < 22; ++i) bad_row += (i ? ",x" : "1");
    spit(dir / "bad_number.csv", header + "\n" + good_row + "\n" + bad_row + "\n");
    REQUIRE_THROWS_WITH(read_trajectory_csv(dir / "bad_number.csv"),
                        Catch::Matchers::ContainsSubstring("line 3"));

    spit(dir / "no_rows.csv", header + "\n");
    REQUIRE_THROWS_AS(read_trajectory_csv(dir / "no_rows.csv"), std::runtime_error);
}

TEST_CASE("training log csv layout") {
    IterationLog a;
    a.iter = 0;
    a.mean_train_cost = 12.25;
    a.mean_test_cost = 11.5;
    a.min_cost = 10.0;
    a.violation_frac = 0.25;
    a.grad_norm = 3.5;
    a.wall_s = 0.125;
    IterationLog b = a;
    b.iter = 1;
    const fs::path p = test_dir() / "train_log.csv";
    write_training_log_csv(p, {a, b});
    std::ifstream in(p);
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line == training_log_csv_header());
    REQUIRE(std::getline(in, line));
    REQUIRE(line == "0,12.25,11.5,10,0.25,0,0,3.5,0.125");
    REQUIRE(std::getline(in, line));
    REQUIRE(line.rfind("1,", 0) == 0);
    REQUIRE_FALSE(std::getline(in, line));
}

TEST_CASE("stability csv layout") {
    const Trajectory traj = classical_descent();
    const auto report = stability_report(traj);
    const fs::path p = test_dir() / "stability.csv";
    write_stability_csv(p, report);
    std::ifstream in(p);
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line == stability_csv_header());
    size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 13);
        REQUIRE((cells[8] == "0" || cells[8] == "1"));
        REQUIRE(cells[2] == "6");   // K_R
        REQUIRE(cells[3] == "-2");  // K_V
        REQUIRE(cells[8] == "1");   // classical gains are stable everywhere
    }
    REQUIRE(rows == report.size());
}

TEST_CASE("scenario config serializes and loads back") {
    ScenarioConfig c;
    c.name = "custom";
    c.guidance.K_R = 5.5;
    c.guidance.K_V = -1.5;
    c.guidance.T_f = 72.0;
    c.r0 = Vec3(10.0, 20.0, 30.0);
    c.policy.n_per_axis = 3;
    c.train.max_iters = 17;
    c.train.critic_mode = "td";
    c.mc_trials = 250;

    const ScenarioConfig d = config_from_json(to_json(c));
    REQUIRE(d.name == "custom");
    REQUIRE(d.guidance.K_R == 5.5);
    REQUIRE(d.guidance.K_V == -1.5);
    REQUIRE(d.guidance.T_f == 72.0);
    REQUIRE(d.r0 == c.r0);
    REQUIRE(d.v0 == c.v0);
    REQUIRE(d.policy.n_per_axis == 3);
    REQUIRE(d.train.max_iters == 17);
    REQUIRE(d.train.critic_mode == "td");
    REQUIRE(d.mc_trials == 250);
    REQUIRE(d.spacecraft.m_dry == c.spacecraft.m_dry);
    REQUIRE(d.spacecraft.cant_angle == Approx(c.spacecraft.cant_angle).epsilon(1e-12));
    REQUIRE(d.environment.slope_angle == Approx(c.environment.slope_angle).epsilon(1e-12));
    REQUIRE(d.environment.g == c.environment.g);
    REQUIRE(d.cost.b_impact == c.cost.b_impact);
    REQUIRE(d.dispersion.pos_halfwidth == c.dispersion.pos_halfwidth);

    SECTION("from a file, with unknown and missing keys tolerated") {
        const fs::path p = test_dir() / "config.json";
        spit(p, R"({"name":"partial","guidance":{"K_R":4.0},"unknown_key":true})");
        const ScenarioConfig e = load_config(p.string());
        REQUIRE(e.name == "partial");
        REQUIRE(e.guidance.K_R == 4.0);
        REQUIRE(e.guidance.K_V == -2.0);       // default kept
        REQUIRE(e.spacecraft.m_wet == 1905.0); // default kept
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_config((test_dir() / "missing.json").string()),
                          std::runtime_error);
    }
    SECTION("invalid values are rejected") {
        REQUIRE_THROWS_AS(config_from_json({{"guidance", {{"strategy", "warp"}}}}),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(config_from_json({{"train", {{"critic_mode", "q"}}}}),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(config_from_json({{"guidance", {{"n_steps", 0}}}}),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(config_from_json({{"cost", {{"b_impact", 1.0}}}}),
                          std::invalid_argument);
    }
}

TEST_CASE("config hash pins the resolved configuration") {
    ScenarioConfig a;
    const std::string h1 = config_hash(a);
    const std::string h2 = config_hash(a);
    REQUIRE(h1 == h2);
    REQUIRE(h1.size() == 16);
    REQUIRE(h1.find_first_not_of("0123456789abcdef") == std::string::npos);

    ScenarioConfig b;
    b.guidance.K_R = 6.000001;
    REQUIRE(config_hash(b) != h1);
}

TEST_CASE("scenario helpers") {
    ScenarioConfig c;
    const LanderState nom = c.nominal_state();
    REQUIRE(nom.m == c.spacecraft.m_wet);
    REQUIRE(nom.r == c.r0);
    REQUIRE(nom.t == 0.0);
    REQUIRE(c.zz_strategy() == ZemZevStrategy::constant_g);
    c.strategy = "ballistic";
    REQUIRE(c.zz_strategy() == ZemZevStrategy::no_control);
    REQUIRE(c.flight_options().n_steps == c.n_steps);
    REQUIRE(c.episode_options().n_substeps == c.n_substeps);

    c.policy.sigma_gain = 0.7;
    c.policy.tf_max = 123.0;
    const PolicyParams pp = c.warm_policy();
    REQUIRE(pp.sigma_gain == 0.7);
    REQUIRE(pp.tf_max == 123.0);
    REQUIRE(mean_tof(features(c.nominal_state(), pp.rbf), pp) == Approx(c.guidance.T_f));

    const TrainConfig tc = c.train_config(99);
    REQUIRE(tc.seed == 99);
    REQUIRE(tc.nominal.m == c.spacecraft.m_wet);
    REQUIRE(tc.episode.n_steps == c.n_steps);
}

TEST_CASE("policy checkpoint round trip") {
    ScenarioConfig c;
    c.policy.n_per_axis = 2;
    PolicyParams pp = c.warm_policy();
    pp.theta_KR(0) = 0.125;  // make it distinguishable from the warm start
    const fs::path p = test_dir() / "policy.json";
    save_policy_checkpoint(p, pp, {{"iterations", 7}});

    nlohmann::json meta;
    const PolicyParams back = load_policy_checkpoint(p, &meta);
    REQUIRE(meta.at("iterations") == 7);
    REQUIRE(back.theta_KR == pp.theta_KR);
    REQUIRE(back.theta_KV == pp.theta_KV);
    REQUIRE(back.theta_Tf == pp.theta_Tf);
    REQUIRE(back.sigma_gain == pp.sigma_gain);
    REQUIRE(back.sigma_Tf == pp.sigma_Tf);
    REQUIRE(back.tf_min == pp.tf_min);
    REQUIRE(back.tf_max == pp.tf_max);
    REQUIRE(back.rbf.pos_centers.size() == pp.rbf.pos_centers.size());
    REQUIRE(back.rbf.pos_centers[3] == pp.rbf.pos_centers[3]);
    REQUIRE(back.rbf.beta_pos == pp.rbf.beta_pos);

    SECTION("unknown format version is refused") {
        nlohmann::json j = read_json_file(p);
        j["format_version"] = 99;
        write_json_file(p, j);
        REQUIRE_THROWS_AS(load_policy_checkpoint(p), std::runtime_error);
    }
}

TEST_CASE("manifest is reproducible and carries no timestamps") {
    ScenarioConfig c;
    const fs::path dir = test_dir() / "manifest_a";
    write_manifest(dir, "simulate", c, 42, {"trajectory.csv"});
    const nlohmann::json j = read_json_file(dir / "manifest.json");
    REQUIRE(j.at("command") == "simulate");
    REQUIRE(j.at("seed") == 42);
    REQUIRE(j.at("scenario") == c.name);
    REQUIRE(j.at("config_hash") == config_hash(c));
    REQUIRE(j.at("outputs").size() == 1);
    REQUIRE(j.contains("versions"));
    const std::string raw = slurp(dir / "manifest.json");
    REQUIRE(raw.find("time") == std::string::npos);
    REQUIRE(raw.find("date") == std::string::npos);

    const fs::path dir2 = test_dir() / "manifest_b";
    write_manifest(dir2, "simulate", c, 42, {"trajectory.csv"});
    REQUIRE(slurp(dir2 / "manifest.json") == raw);
}

TEST_CASE("svg plots are emitted") {
    const fs::path lp = test_dir() / "line.svg";
    write_line_plot(lp, "title", "x", "y",
                    {Series{"a", {0.0, 1.0, 2.0}, {0.0, 1.0, 4.0}},
                     Series{"b", {0.0, 1.0, 2.0}, {1.0, 0.5, 0.0}}});
    const std::string line_svg = slurp(lp);
    REQUIRE(line_svg.find("<svg") != std::string::npos);
    REQUIRE(line_svg.find("polyline") != std::string::npos);
    REQUIRE(line_svg.find("</svg>") != std::string::npos);

    const fs::path sp = test_dir() / "scatter.svg";
    write_scatter_plot(sp, "title", "x", "y", {Series{"pts", {0.0, 1.0}, {2.0, 3.0}}});
    const std::string scatter_svg = slurp(sp);
    REQUIRE(scatter_svg.find("circle") != std::string::npos);

    SECTION("degenerate single-point input does not crash") {
        write_line_plot(test_dir() / "tiny.svg", "t", "x", "y", {Series{"p", {1.0}, {1.0}}});
        REQUIRE(slurp(test_dir() / "tiny.svg").find("<svg") != std::string::npos);
    }
}

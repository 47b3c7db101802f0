#include <dlab/dlab.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

using namespace dlab;

int main(int argc, char** argv) {
    CLI::App app{"powered-descent guidance lab: feedback laws, policy training, "
                 "dispersion analysis, stability checks"};
    app.require_subcommand(1);

    std::string config_path;
    CommonOptions common;
    std::string out_str = "out";
    app.add_option("--config", config_path, "scenario config JSON (omit for defaults)");
    app.add_option("--seed", common.seed, "master seed for all random streams");
    app.add_option("--out", out_str, "output directory")->capture_default_str();
    app.add_flag("--no-plots", common.no_plots, "skip SVG plot output");
    app.add_flag("--strict", common.strict, "nonzero exit on violations/instability");

    int rc = 0;
    auto scenario = [&]() {
        ScenarioConfig cfg =
            config_path.empty() ? ScenarioConfig{} : load_config(config_path);
        cfg.validate();
        common.out_dir = out_str;
        return cfg;
    };

    // simulate
    auto* sim = app.add_subcommand("simulate", "fly one closed-loop descent");
    sim->fallthrough();
    SimulateOptions so;
    double sim_kr = 0, sim_kv = 0, sim_tf = 0;
    auto* o_kr = sim->add_option("--kr", sim_kr, "override position gain K_R");
    auto* o_kv = sim->add_option("--kv", sim_kv, "override velocity gain K_V");
    auto* o_tf = sim->add_option("--tf", sim_tf, "override time of flight [s]");
    sim->add_option("--policy", so.policy_path, "policy checkpoint for adaptive gains");
    sim->add_flag("--dispersed", so.dispersed, "draw the initial state from the dispersion");
    sim->add_flag("--terminate-on-impact", so.terminate_on_impact,
                  "stop integration at terrain contact");
    sim->callback([&]() {
        if (o_kr->count()) so.K_R = sim_kr;
        if (o_kv->count()) so.K_V = sim_kv;
        if (o_tf->count()) so.T_f = sim_tf;
        rc = run_simulate(scenario(), common, so);
    });

    // train
    auto* tr = app.add_subcommand("train", "run actor-critic training");
    tr->fallthrough();
    int tr_iters = 0;
    auto* o_iters = tr->add_option("--iters", tr_iters, "override max iterations");
    tr->callback([&]() {
        ScenarioConfig cfg = scenario();
        if (o_iters->count()) cfg.train.max_iters = tr_iters;
        rc = run_train(cfg, common);
    });

    // montecarlo
    auto* mc = app.add_subcommand("montecarlo", "dispersed-trial campaign");
    mc->fallthrough();
    std::string mc_policy;
    int mc_trials = 0;
    mc->add_option("--policy", mc_policy, "policy checkpoint (omit for fixed gains)");
    auto* o_trials = mc->add_option("--trials", mc_trials, "override trial count");
    mc->callback([&]() {
        ScenarioConfig cfg = scenario();
        if (o_trials->count()) cfg.mc_trials = mc_trials;
        rc = run_montecarlo(cfg, common, mc_policy);
    });

    // compare
    auto* cp = app.add_subcommand("compare",
                                  "classical vs adaptive vs energy-optimal reference");
    cp->fallthrough();
    std::string cp_policy;
    bool cp_disp = false;
    cp->add_option("--policy", cp_policy, "policy checkpoint for the adaptive row");
    cp->add_flag("--dispersed", cp_disp, "draw the initial state from the dispersion");
    cp->callback([&]() { rc = run_compare(scenario(), common, cp_policy, cp_disp); });

    // stability
    auto* st = app.add_subcommand("stability", "eigenvalue and transition-matrix analysis");
    st->fallthrough();
    StabilityOptions sto;
    double st_kr = 0, st_kv = 0;
    auto* so_kr = st->add_option("--kr", st_kr, "gain K_R (default: config)");
    auto* so_kv = st->add_option("--kv", st_kv, "gain K_V (default: config)");
    st->add_option("--policy", sto.policy_path, "analyze gains along a flown policy descent");
    st->add_option("--trajectory", sto.trajectory_path,
                   "analyze a previously emitted trajectory CSV");
    st->add_option("--points", sto.n_points, "samples along the descent")
        ->capture_default_str();
    st->add_option("--rho-min", sto.rho_min, "smallest t_go/T_f analyzed")
        ->capture_default_str();
    st->callback([&]() {
        if (so_kr->count()) sto.K_R = st_kr;
        if (so_kv->count()) sto.K_V = st_kv;
        rc = run_stability(scenario(), common, sto);
    });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}

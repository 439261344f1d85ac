#include "psd_runner/config.hpp"
#include "psd_runner/report.hpp"
#include "psd_runner/scenarios.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace psd::runner;

namespace {

struct CommonFlags {
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t grid_n = 0;
    double t_max = 0.0;
    bool fail_fast = false;
    std::vector<CLI::Option*> opts;  // out_dir, seed, grid_n, t_max, fail_fast
};

void add_common(CLI::App* sub, CommonFlags& f) {
    f.opts.push_back(sub->add_option("--out-dir", f.out_dir, "Output directory")->envname("PSD_OUT_DIR"));
    f.opts.push_back(sub->add_option("--seed", f.seed, "RNG seed")->envname("PSD_SEED"));
    f.opts.push_back(sub->add_option("--grid-n", f.grid_n, "Number of grid cells (power of two)")->envname("PSD_GRID_N"));
    f.opts.push_back(sub->add_option("--t-max", f.t_max, "Time horizon")->envname("PSD_T_MAX"));
    f.opts.push_back(sub->add_flag("--fail-fast", f.fail_fast, "Stop at the first failing check")->envname("PSD_FAIL_FAST"));
}

void print_summary(const RunReport& rep) {
    for (const auto& c : rep.checks())
        std::cout << to_string(c.status) << "  " << c.name << "  " << c.detail << '\n';
    for (const auto& w : rep.warnings()) std::cout << "warning: " << w << '\n';
    const auto j = rep.to_json();
    if (j.contains("error")) std::cerr << "error (" << j["error"]["kind"].get<std::string>() << "): " << j["error"]["message"].get<std::string>() << '\n';
    std::cout << "report: " << rep.config().out_dir << "/report.json  exit " << rep.exit_code() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"psd: permanent spatial decomposition scenarios and property checks"};
    app.require_subcommand(1);

    CommonFlags cg, cs, cv, cr;
    auto* gaussian = app.add_subcommand("gaussian", "Two Gaussian packets: w_F, w_E(t), branching tree, trajectories");
    auto* scattering = app.add_subcommand("scattering", "Asymptotic velocity channels: decay of spatial w");
    auto* verify = app.add_subcommand("verify", "Randomized property suite");
    auto* runcmd = app.add_subcommand("run", "Run the scenario described by a JSON config file");
    add_common(gaussian, cg);
    add_common(scattering, cs);
    add_common(verify, cv);
    add_common(runcmd, cr);

    std::string lane = "free";
    scattering->add_option("--lane", lane, "free or well")->check(CLI::IsMember({"free", "well"}))->envname("PSD_LANE");
    std::size_t trials = 0;
    std::string fault;
    auto* trials_opt = verify->add_option("--trials", trials, "Trial count for every suite")->envname("PSD_TRIALS");
    auto* fault_opt = verify->add_option("--inject-fault", fault, "Flip the tolerance of one named check");
    std::string config_path;
    runcmd->add_option("--config", config_path, "Scenario config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help exits 0; malformed command lines count as configuration errors.
        return app.exit(e) == 0 ? kExitPass : kExitConfig;
    }

    const CommonFlags& common = *gaussian ? cg : *scattering ? cs : *verify ? cv : cr;
    ScenarioConfig cfg;
    try {
        if (*gaussian) cfg = default_config(ScenarioKind::gaussian);
        else if (*scattering) cfg = default_config(ScenarioKind::scattering, lane);
        else if (*verify) cfg = default_config(ScenarioKind::verify);
        else cfg = load_config(config_path);

        Overrides o;
        if (common.opts[0]->count()) o.out_dir = common.out_dir;
        if (common.opts[1]->count()) o.seed = common.seed;
        if (common.opts[2]->count()) o.grid_n = common.grid_n;
        if (common.opts[3]->count()) o.t_max = common.t_max;
        if (common.opts[4]->count()) o.fail_fast = common.fail_fast;
        if (trials_opt->count()) o.trials = trials;
        if (fault_opt->count()) o.inject_fault = fault;
        apply_overrides(cfg, o);
    } catch (const psd::Error& e) {
        std::cerr << "error (" << psd::to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code_for(e.kind());
    }

    const RunReport rep = run(cfg);
    print_summary(rep);
    return rep.exit_code();
}

#include "psd_runner/scenarios.hpp"

#include <psd/format.hpp>
#include <psd/geometry.hpp>
#include <psd/grid.hpp>
#include <psd/scattering.hpp>
#include <psd/special.hpp>
#include <psd/tree.hpp>

#include <chrono>
#include <cmath>
#include <sstream>

namespace psd::runner {

using grid::GaussianPacketParams;
using grid::GridSpec;
using grid::GridWavefunction;
using nlohmann::json;

namespace {

GaussianPacketParams packet_params(const PacketConfig& p) { return {p.p0, p.sigma_p, p.x0, p.mass, p.hbar}; }

GridSpec grid_of(const ScenarioConfig& c) { return GridSpec(c.grid.n_cells, c.grid.box_length); }

std::string fmt(double v) { return format_double(v); }

// Only the first wrap per state is reported; later samples only get worse.
bool note_wrap(RunReport& rep, const GridWavefunction& psi, double t, const std::string& what) {
    if (auto w = grid::wrap_warning(psi)) {
        rep.warn(what + " first wraps at t=" + fmt(t) + ": " + *w);
        return true;
    }
    return false;
}

std::string csv_trajectories(const tree::SpatialTree<GridWavefunction>& T, const std::vector<tree::Branch>& bs,
                             const std::vector<double>& times, std::vector<geometry::Trajectory>* out = nullptr) {
    std::vector<geometry::LabeledTrajectory> rows;
    for (const auto& b : bs) {
        rows.push_back({b.leaf, b.probability, geometry::branch_trajectory(T, b, times)});
        if (out) out->push_back(rows.back().trajectory);
    }
    std::ostringstream os;
    geometry::write_trajectory_csv(os, rows);
    return os.str();
}

json tree_to_json(const tree::SpatialTree<GridWavefunction>& T) {
    return tree::tree_json<GridWavefunction>(
        T, [](const GridWavefunction& s) -> std::optional<double> { return geometry::centroid(s); });
}

}  // namespace

LogW gaussian_momentum_w(const PacketConfig& p) {
    // |phi_pm(p)|^2 = exp(-(p -+ p0)^2 / sigma_p^2) / (sqrt(pi) sigma_p); the
    // normalization cancels in w, so only the exponents are sampled.
    const double span = std::abs(p.p0) + 12.0 * p.sigma_p;
    const std::size_t n = 40001;
    const double dp = 2.0 * span / static_cast<double>(n - 1);
    std::vector<double> lm(n), lp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double q = -span + dp * static_cast<double>(k);
        const double um = (q + p.p0) / p.sigma_p, up = (q - p.p0) / p.sigma_p;
        lm[k] = -um * um;
        lp[k] = -up * up;
    }
    return w_two_from_log_densities(lm, lp, std::log(dp));
}

void run_gaussian(RunReport& rep) {
    const auto& c = rep.config();
    const auto& th = c.thresholds;
    const GridSpec g = grid_of(c);
    const GaussianPacketParams P = packet_params(c.packet);
    const double ratio = c.packet.p0 / c.packet.sigma_p;

    const auto t_wf = std::chrono::steady_clock::now();
    const LogW wf = gaussian_momentum_w(c.packet);
    const double wf_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_wf).count();
    const double log_expected = 0.5 * log_erfc(ratio);
    const double rel = std::abs(std::expm1(wf.log_value - log_expected));
    rep.set_result("w_F", {{"value", wf.value}, {"log_value", wf.log_value}, {"log10", wf.log_value / std::log(10.0)},
                           {"seconds", wf_seconds}});
    rep.pass_if("gaussian.w_F", rel <= th.wf_relative,
                "log-domain momentum w vs sqrt(erfc(p0/sigma_p)); relative error " + fmt(rel),
                {{"w_F", wf.value}, {"expected", std::exp(log_expected)}, {"relative_error", rel}});

    const GridWavefunction m0 = grid::make_gaussian(P, -1, g), p0 = grid::make_gaussian(P, 1, g);
    const auto times = sample_times(c.time);
    std::vector<double> wE, wA, f;
    std::vector<GridWavefunction> minus, plus;
    bool wrapped = false;
    for (double t : times) {
        minus.push_back(t == 0.0 ? m0 : grid::propagate_free(m0, t));
        plus.push_back(t == 0.0 ? p0 : grid::propagate_free(p0, t));
        if (!wrapped) wrapped = note_wrap(rep, minus.back(), t, "left packet") | note_wrap(rep, plus.back(), t, "right packet");
        wE.push_back(w_two_spatial(minus.back(), plus.back()).value);
        wA.push_back(grid::analytic_gaussian_wE(P, t));
        f.push_back(grid::gaussian_separation_ratio(P, t));
    }

    std::ostringstream csv;
    csv << "t,f,w_E,w_E_analytic\n";
    double max_err = 0.0, max_rise = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        csv << fmt(times[i]) << ',' << fmt(f[i]) << ',' << fmt(wE[i]) << ',' << fmt(wA[i]) << '\n';
        max_err = std::max(max_err, std::abs(wE[i] - wA[i]));
        if (i > 0) max_rise = std::max(max_rise, wE[i] - wE[i - 1]);
    }
    write_output(rep, "gaussian_wE.csv", csv.str());

    rep.pass_if("gaussian.w_E_matches_analytic", max_err <= th.w_tolerance,
                "max |w_E grid - analytic| = " + fmt(max_err) + " over " + std::to_string(times.size()) + " samples",
                {{"max_abs_error", max_err}, {"samples", times.size()}});
    // w is the square root of an overlap sum whose roundoff is ~1e-13, so grid w has a ~3e-7 floor.
    constexpr double kGridWFloor = 1e-6;
    rep.pass_if("gaussian.w_E_monotone", max_rise <= kGridWFloor, "largest increase between samples " + fmt(max_rise),
                {{"max_increase", max_rise}});
    const double asym = std::exp(log_expected);
    const double asym_err = std::abs(wE.back() - asym);
    rep.pass_if("gaussian.asymptote", asym_err <= th.asymptote_tolerance,
                "w_E(t_max) = " + fmt(wE.back()) + " vs sqrt(erfc(p0/sigma_p)) = " + fmt(asym),
                {{"w_E_t_max", wE.back()}, {"asymptote", asym}, {"abs_error", asym_err}});

    // f(t) properties; the gap p0/sigma_p - f(t) has the closed form ratio a^2 / (s (s + t)).
    bool increasing = true;
    for (std::size_t i = 1; i < f.size(); ++i) increasing = increasing && f[i] > f[i - 1];
    const double a = c.packet.mass * c.packet.hbar / (c.packet.sigma_p * c.packet.sigma_p);
    const double s = std::hypot(a, c.time.t_max);
    const double gap_closed = ratio * a * a / (s * (s + c.time.t_max));
    const double gap = ratio - f.back();
    const double gap_err = std::abs(gap - gap_closed);
    rep.pass_if("gaussian.f_at_zero", f.front() == 0.0, "f(0) = " + fmt(f.front()), {{"f0", f.front()}});
    if (ratio == 0.0)
        rep.skip("gaussian.f_increasing", "p0 = 0: f vanishes identically");
    else
        rep.pass_if("gaussian.f_increasing", increasing, increasing ? "strictly increasing on the sample grid"
                                                                     : "f is not strictly increasing on the sample grid");
    rep.pass_if("gaussian.f_limit_gap", gap_err <= 1e-12,
                "p0/sigma_p - f(t_max) = " + fmt(gap) + ", closed form " + fmt(gap_closed),
                {{"gap", gap}, {"closed_form", gap_closed}, {"abs_error", gap_err}});

    // Branching time t1: first sample where the pair is a permanent spatial decomposition to threshold.
    std::optional<std::size_t> i1;
    for (std::size_t i = 0; i < times.size() && !i1; ++i)
        if (wE[i] <= th.branch_threshold) i1 = i;

    tree::SpatialTree<GridWavefunction> T{add(m0, p0), {}, grid::free_propagator()};
    if (i1) {
        const double t1 = times[*i1];
        rep.set_result("t1", t1);
        T.nodes.push_back({t1, Decomposition<GridWavefunction>({minus[*i1], plus[*i1]}), CoarseningMap{{0, 0}, 1}});
    } else {
        rep.set_result("t1", nullptr);
        rep.warn("no branching time found: w_E stays above branch_threshold " + fmt(th.branch_threshold) +
                 " up to t_max = " + fmt(c.time.t_max));
    }
    write_output(rep, "tree.json", tree_to_json(T).dump(2) + "\n");

    const auto bs = tree::branches(T);
    std::vector<geometry::Trajectory> trajs;
    write_output(rep, "trajectories.csv", csv_trajectories(T, bs, times, &trajs));
    json jb = json::array();
    for (const auto& b : bs) jb.push_back({{"leaf", b.leaf}, {"probability", b.probability}, {"path", b.path}});
    rep.set_result("branches", jb);

    if (!i1) {
        rep.skip("gaussian.branches", "no t1 found, the tree has no nodes");
        rep.skip("gaussian.trajectories", "no t1 found");
        return;
    }
    double prob_err = 0.0;
    for (const auto& b : bs) prob_err = std::max(prob_err, std::abs(b.probability - 0.5));
    rep.pass_if("gaussian.branches", bs.size() == 2 && prob_err <= th.probability_tolerance,
                std::to_string(bs.size()) + " branches, max |p - 1/2| = " + fmt(prob_err),
                {{"count", bs.size()}, {"max_probability_error", prob_err}});

    // Leaf 0 is the left-moving packet.
    double traj_err = 0.0;
    for (std::size_t b = 0; b < trajs.size(); ++b) {
        const double sign = bs[b].leaf == 0 ? -1.0 : 1.0;
        for (std::size_t i = *i1; i < times.size(); ++i) {
            const double expect = c.packet.x0 + sign * times[i] * c.packet.p0 / c.packet.mass;
            traj_err = std::max(traj_err, std::abs(trajs[b].x[i][0] - expect));
        }
    }
    const double tol = th.trajectory_cells * g.dx();
    rep.pass_if("gaussian.trajectories", traj_err <= tol,
                "max |centroid - (x0 +- t p0/m)| after t1 = " + fmt(traj_err) + " (limit " + fmt(tol) + ")",
                {{"max_abs_error", traj_err}, {"limit", tol}});
}

void run_scattering(RunReport& rep) {
    using namespace scattering;
    const auto& c = rep.config();
    const auto& th = c.thresholds;
    const auto& sc = c.scattering;
    const GridSpec g = grid_of(c);
    const GaussianPacketParams P = packet_params(c.packet);
    const auto times = sample_times(c.time);
    Theorem2Options opts;
    opts.jitter = th.jitter;

    if (sc.lane == "free") {
        GridWavefunction psi = add(grid::make_gaussian(P, 1, g), grid::make_gaussian(P, -1, g));
        psi = scale(psi, 1.0 / norm(psi));
        const auto F = AsymptoticVelocityMeasure::free(c.packet.mass);
        opts.control_lane = true;
        const auto curve = theorem2_curve(F, psi, ChannelPartition::sign_split(), times, grid::free_propagator(), opts);
        std::vector<double> dtimes(times.begin() + 1, times.end());
        const auto diag = convergence_diagnostic(
            F, psi, {{"neg", IntervalSet::below(0.0)}, {"pos", IntervalSet::at_least(0.0)}, {"all", IntervalSet::all()}},
            dtimes, grid::free_propagator());
        std::ostringstream os;
        write_decay_csv(os, curve, &diag);
        write_output(rep, "decay.csv", os.str());
        for (const auto& w : curve.warnings) rep.warn(w);
        for (const auto& w : diag.warnings) rep.warn(w);

        rep.set_result("transient_time", curve.transient_time);
        rep.set_result("tail_slope", curve.tail_slope);
        rep.pass_if("scattering.monotone_after_transient", curve.monotone_after_transient,
                    "largest increase after t = " + fmt(curve.transient_time) + ": " + fmt(curve.max_increase_after_transient),
                    {{"transient_time", curve.transient_time}, {"max_increase", curve.max_increase_after_transient}});
        rep.pass_if("scattering.final_w", curve.w.back() < th.final_w, "w_E(t_max) = " + fmt(curve.w.back()),
                    {{"w_final", curve.w.back()}, {"limit", th.final_w}});
        double drift = 0.0;
        for (double w : curve.control_w) drift = std::max(drift, std::abs(w - curve.control_w.front()));
        rep.pass_if("scattering.control_constant", drift <= th.control_tolerance,
                    "momentum-representation w varies by " + fmt(drift), {{"max_variation", drift}});
        double e_all = 0.0;
        for (double e : diag.e[2]) e_all = std::max(e_all, e);
        rep.pass_if("scattering.exact_lane", e_all <= th.exact_lane_tolerance, "max e_all(t) = " + fmt(e_all),
                    {{"max_e_all", e_all}});
        rep.set_result("e_pos_final", diag.e[1].back());
        return;
    }

    const Eigen::VectorXd V = poschl_teller(g, sc.V0, sc.a);
    BoundStateOptions bopts;
    bopts.window_cells = sc.window_cells;
    auto bound = solve_bound_states(g, V, c.packet.mass, c.packet.hbar, bopts);
    rep.set_result("bound_energies", bound.energies);
    rep.set_result("bound_residuals", bound.residuals);
    rep.pass_if("scattering.bound_states", !bound.energies.empty(),
                std::to_string(bound.energies.size()) + " bound states below the cutoff",
                {{"count", bound.energies.size()}});
    const auto F = AsymptoticVelocityMeasure::short_range(c.packet.mass, std::move(bound));
    const auto X = ChannelPartition::bound_and_continuum();
    GridWavefunction psi = grid::make_gaussian(P, 1, g);
    psi = scale(psi, 1.0 / norm(psi));

    const grid::StrangPropagator Uc(V, sc.commutation_dt);
    const auto b = f_plus_project(F, X.channels()[0], psi);
    const double comm = norm(subtract(f_plus_project(F, X.channels()[0], Uc(psi, sc.commutation_time)), Uc(b, sc.commutation_time)));
    rep.pass_if("scattering.commutation", comm <= th.commutation_tolerance,
                "||F(bound) U psi - U F(bound) psi|| = " + fmt(comm), {{"residual", comm}});

    const auto curve = theorem2_curve(F, psi, X, times, grid::StrangPropagator(V, sc.dt), opts);
    std::ostringstream os;
    write_decay_csv(os, curve);
    write_output(rep, "decay.csv", os.str());
    for (const auto& w : curve.warnings) rep.warn(w);
    rep.set_result("transient_time", curve.transient_time);
    rep.set_result("tail_slope", curve.tail_slope);
    rep.pass_if("scattering.channels_kept", curve.dropped_channels.empty(),
                curve.dropped_channels.empty() ? "both channels carry weight" : "channels dropped for negligible weight");
    rep.pass_if("scattering.monotone_after_transient", curve.monotone_after_transient,
                "largest increase after t = " + fmt(curve.transient_time) + ": " + fmt(curve.max_increase_after_transient),
                {{"transient_time", curve.transient_time}, {"max_increase", curve.max_increase_after_transient}});
    rep.pass_if("scattering.final_w", curve.w.back() < th.final_w, "w_E(t_max) = " + fmt(curve.w.back()),
                {{"w_final", curve.w.back()}, {"limit", th.final_w}});
}

void run_custom_tree(RunReport& rep) {
    const auto& c = rep.config();
    const GridSpec g = grid_of(c);
    std::vector<GridWavefunction> packets;
    for (const auto& p : c.tree.packets) packets.push_back(grid::make_gaussian(packet_params(p), 1, g));
    GridWavefunction root = packets.front();
    for (std::size_t i = 1; i < packets.size(); ++i) root = add(root, packets[i]);

    tree::SpatialTree<GridWavefunction> T{root, {}, grid::free_propagator()};
    const std::vector<std::vector<std::size_t>>* prev = nullptr;
    for (std::size_t s = 0; s < c.tree.stages.size(); ++s) {
        const auto& st = c.tree.stages[s];
        std::vector<GridWavefunction> elems;
        CoarseningMap h{{}, prev ? prev->size() : 1};
        for (const auto& grp : st.groups) {
            GridWavefunction e = zero_like(root);
            for (auto k : grp) e = add(e, packets[k]);
            elems.push_back(st.t == 0.0 ? e : grid::propagate_free(e, st.t));
            std::size_t parent = 0;
            if (prev) {
                parent = prev->size();
                for (std::size_t q = 0; q < prev->size(); ++q)
                    if (std::find((*prev)[q].begin(), (*prev)[q].end(), grp.front()) != (*prev)[q].end()) parent = q;
                for (auto k : grp)
                    if (std::find((*prev)[parent].begin(), (*prev)[parent].end(), k) == (*prev)[parent].end())
                        throw ConfigError("config.tree.stages[" + std::to_string(s) + "] does not refine the previous stage");
            }
            h.target.push_back(parent);
        }
        T.nodes.push_back({st.t, Decomposition<GridWavefunction>(std::move(elems)), std::move(h)});
        prev = &st.groups;
    }

    const auto v = tree::validate_tree(T);
    rep.pass_if("tree.valid", v.valid, v.valid ? "tree validates" : v.issues.front(),
                {{"worst_root_residual", v.worst_root_residual}, {"worst_lineage_residual", v.worst_lineage_residual}});
    if (!v.valid) return;
    write_output(rep, "tree.json", tree_to_json(T).dump(2) + "\n");

    tree::BranchOptions bo;
    bo.require_orthogonal = false;
    const auto bs = tree::branches(T, bo);
    if (!T.nodes.empty() && max_normalized_overlap(T.nodes.back().decomposition) > bo.ortho_tol)
        rep.warn("leaves are not orthogonal; branch probabilities are not a Born measure");
    const auto times = sample_times(c.time);
    write_output(rep, "trajectories.csv", csv_trajectories(T, bs, times));

    double psum = 0.0;
    json jb = json::array();
    for (const auto& b : bs) {
        psum += b.probability;
        jb.push_back({{"leaf", b.leaf}, {"probability", b.probability}, {"path", b.path}});
    }
    rep.set_result("branches", jb);
    const std::size_t leaves = T.nodes.empty() ? 1 : T.nodes.back().decomposition.size();
    rep.pass_if("tree.branch_count", bs.size() == leaves,
                std::to_string(bs.size()) + " branches for " + std::to_string(leaves) + " leaves");
    if (v.last_orthogonal)
        rep.pass_if("tree.probabilities", std::abs(psum - 1.0) <= c.thresholds.probability_tolerance,
                    "branch probabilities sum to " + fmt(psum), {{"sum", psum}});
    else
        rep.skip("tree.probabilities", "leaves are not orthogonal");

    const auto wt = tree::w_plus_tree(T, evaluator(grid::Representation::position), times);
    rep.set_result("w_plus_tree", to_json(wt.sampled));
    rep.pass_if("tree.w_plus_consistent", wt.consistent,
                "sampled sup " + fmt(wt.sampled.value) + ", max over nodes " + fmt(wt.max_over_nodes));
    for (const auto& node : T.nodes)
        for (const auto& e : node.decomposition.elements()) note_wrap(rep, grid::propagate_free(e, c.time.t_max - node.time), c.time.t_max, "tree element");
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::invalid_input:
        case ErrorKind::resolution: return kExitConfig;
        case ErrorKind::resource_limit:
        case ErrorKind::not_found: return kExitResource;
    }
    return kExitResource;
}

RunReport run(const ScenarioConfig& cfg) {
    RunReport rep(cfg);
    rep.set_meta("started", utc_timestamp());
    const auto t0 = std::chrono::steady_clock::now();
    try {
        validate(cfg);
        switch (cfg.kind) {
            case ScenarioKind::gaussian: run_gaussian(rep); break;
            case ScenarioKind::scattering: run_scattering(rep); break;
            case ScenarioKind::custom_tree: run_custom_tree(rep); break;
            case ScenarioKind::verify: run_verify(rep); break;
        }
    } catch (const FailFastStop&) {
        rep.warn("stopped at the first failing check (fail_fast)");
    } catch (const Error& e) {
        rep.set_error({psd::to_string(e.kind()), e.what(), exit_code_for(e.kind())});
    }
    rep.set_meta("finished", utc_timestamp());
    rep.set_meta("wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    write_report(rep);
    return rep;
}

}  // namespace psd::runner

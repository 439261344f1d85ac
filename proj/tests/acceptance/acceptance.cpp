// One PASS/FAIL line per acceptance criterion. Reference values come from the
// oracles in tests/support, not from the library under test.

#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <psd/decomposition.hpp>
#include <psd/finite.hpp>
#include <psd/grid.hpp>
#include <psd/measure_lab.hpp>
#include <psd/partition_search.hpp>
#include <psd/tree.hpp>
#include <psd_runner/scenarios.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace psd;
using finite::StateVector;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

fs::path workdir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "psd_acceptance" / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Numeric CSV rows, skipping '#' comments and the header; empty fields become NaN.
std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell.empty() ? std::nan("") : std::stod(cell));
        if (!line.empty() && line.back() == ',') row.push_back(std::nan(""));
        rows.push_back(row);
    }
    return rows;
}

Decomposition<StateVector> to_decomposition(const std::vector<Eigen::VectorXcd>& parts) {
    std::vector<StateVector> e;
    for (const auto& p : parts) e.emplace_back(p);
    return Decomposition<StateVector>(std::move(e));
}

bool witness_reproduces(const finite::AtomicSpectralMeasure& G, const Decomposition<StateVector>& D,
                        const std::vector<int>& witness, double tol) {
    const Eigen::VectorXcd psi = D.sum().coefficients();
    std::vector<Eigen::VectorXcd> g(D.size(), Eigen::VectorXcd::Zero(psi.size()));
    for (std::size_t k = 0; k < G.size(); ++k) g[static_cast<std::size_t>(witness[k])] += G.atoms()[k].projector * psi;
    for (std::size_t i = 0; i < D.size(); ++i)
        if ((g[i] - D[i].coefficients()).norm() > tol * psi.norm()) return false;
    return true;
}

Outcome criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    runner::PacketConfig p;
    p.p0 = 10.0;
    p.sigma_p = 1.0;
    const auto w = runner::gaussian_momentum_w(p);
    const double secs = seconds_since(t0);
    const double rel = std::abs(w.value - oracle::kPaperWF) / oracle::kPaperWF;
    const double rel_exact = std::abs(w.value - oracle::kSqrtErfc10) / oracle::kSqrtErfc10;
    return {rel <= 0.05 && rel_exact <= 1e-4 && secs < 1.0,
            "w_F = " + num(w.value) + ", rel. to 4.6e-23: " + num(rel) + ", rel. to sqrt(erfc(10)): " + num(rel_exact) +
                ", " + num(secs) + " s"};
}

// Shared by criteria 2 and 3.
struct CurveRun {
    std::vector<std::vector<double>> rows;  // t, f, w_E, w_E_analytic
    double seconds = 0.0;
    int exit_code = -1;
};

const CurveRun& curve_run() {
    static const CurveRun run = [] {
        auto c = runner::default_config(runner::ScenarioKind::gaussian);
        c.packet.p0 = 2.0;
        c.grid = {4096, 320.0};
        c.time = {20.0, 64};
        c.out_dir = workdir("curve").string();
        CurveRun r;
        const auto t0 = std::chrono::steady_clock::now();
        r.exit_code = runner::run(c).exit_code();
        r.seconds = seconds_since(t0);
        r.rows = read_csv(fs::path(c.out_dir) / "gaussian_wE.csv");
        return r;
    }();
    return run;
}

Outcome criterion2() {
    const auto& r = curve_run();
    const oracle::Packet P{2.0, 1.0};
    double err = 0.0, rise = 0.0;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        err = std::max(err, std::abs(r.rows[i][2] - P.wE(r.rows[i][0])));
        if (i > 0) rise = std::max(rise, r.rows[i][2] - r.rows[i - 1][2]);
    }
    const double asym = std::abs(r.rows.back()[2] - oracle::kSqrtErfc2);
    return {r.rows.size() >= 50 && err <= 5e-3 && rise <= 0.0 && asym <= 1e-3 && r.seconds < 30.0,
            std::to_string(r.rows.size()) + " samples, max |w_E - oracle| = " + num(err) + ", max rise " + num(rise) +
                ", |w_E(t_max) - sqrt(erfc 2)| = " + num(asym) + ", " + num(r.seconds) + " s"};
}

Outcome criterion3() {
    const auto& r = curve_run();
    const oracle::Packet P{2.0, 1.0};
    bool increasing = true;
    double f_err = 0.0;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        if (i > 0) increasing = increasing && r.rows[i][1] > r.rows[i - 1][1];
        f_err = std::max(f_err, std::abs(r.rows[i][1] - P.ratio(r.rows[i][0])));
    }
    // p0/sigma_p - f(t) = (p0/sigma_p) a^2 / (s (s + t)), a = m hbar / sigma_p^2, s = sqrt(a^2 + t^2)
    const double t = r.rows.back()[0], a = 1.0, s = std::sqrt(a * a + t * t);
    const double gap = 2.0 - r.rows.back()[1], closed = 2.0 * a * a / (s * (s + t));
    return {r.rows.front()[1] == 0.0 && increasing && std::abs(gap - closed) <= 1e-12 && f_err <= 1e-12,
            "f(0) = " + num(r.rows.front()[1]) + (increasing ? ", strictly increasing" : ", NOT increasing") +
                ", gap error " + num(std::abs(gap - closed)) + ", max |f - oracle| = " + num(f_err)};
}

Outcome criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    gen::Rng r(20240604);
    long va = 0, vb = 0, vc = 0, vd = 0, cross = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int dim = r.uniform_int(2, 6);
        const int K = r.uniform_int(2, dim);
        const int n = r.uniform_int(2, std::min(3, K));
        const auto G = gen::random_measure(r, dim, K);
        const auto P = gen::projectors(G);
        const Eigen::VectorXcd psi = r.complex_vector(dim);

        const auto exact = gen::exact_decomposition(r, G, psi, n);
        const auto Dx = to_decomposition(exact);
        const auto bx = finite::brute_force_w(G, Dx);
        const double ox = oracle::naive_w(P, exact);
        if (!(bx.value <= 1e-9 && ox <= 1e-9 && witness_reproduces(G, Dx, bx.witness, 1e-8))) ++va;

        std::vector<Eigen::VectorXcd> pert;
        std::optional<Decomposition<StateVector>> Dp;
        while (!Dp) {
            pert = gen::perturbed(r, exact, std::exp(r.uniform(std::log(1e-4), 0.0)));
            try {
                Dp.emplace(to_decomposition(pert));
            } catch (const InvalidInput&) {
            }
        }
        const auto bp = finite::brute_force_w(G, *Dp);
        const double op = oracle::naive_w(P, pert);
        if (std::abs(bp.value - op) > 1e-9) ++cross;
        // (a), converse direction: zero w only with a reproducing witness.
        if ((op <= 1e-9) != witness_reproduces(G, *Dp, bp.witness, 1e-8)) ++va;

        // (b) merge the first two elements.
        if (pert.size() >= 3) {
            std::vector<Eigen::VectorXcd> merged{pert[0] + pert[1]};
            for (std::size_t i = 2; i < pert.size(); ++i) merged.push_back(pert[i]);
            const auto bc = finite::brute_force_w(G, to_decomposition(merged));
            if (bc.value > bp.value + 1e-9 || oracle::naive_w(P, merged) > op + 1e-9) ++vb;
        }

        // (c) disjoint subsets I, J.
        const unsigned full = (1u << pert.size()) - 1;
        for (unsigned I = 1; I < full; ++I)
            for (unsigned J = 1; J < full; ++J) {
                if (I & J) continue;
                Eigen::VectorXcd a = Eigen::VectorXcd::Zero(dim), b = Eigen::VectorXcd::Zero(dim);
                for (std::size_t i = 0; i < pert.size(); ++i) {
                    if (I >> i & 1u) a += pert[i];
                    if (J >> i & 1u) b += pert[i];
                }
                if (std::abs(a.dot(b)) / (a.norm() * b.norm()) > 2.0 * op + op * op + 1e-9) ++vc;
            }

        // (d)
        const auto h = minimize_partition(finite::cell_table(G, *Dp), false);
        if (h.value < op - 1e-12) ++vd;
    }
    const double secs = seconds_since(t0);
    return {va + vb + vc + vd + cross == 0 && secs < 120.0,
            "violations (a) " + std::to_string(va) + ", (b) " + std::to_string(vb) + ", (c) " + std::to_string(vc) +
                ", (d) " + std::to_string(vd) + ", brute force vs oracle " + std::to_string(cross) + "; " + num(secs) + " s"};
}

// Independent refinement test: every coarse element is the sum of a disjoint
// subset of fine elements and the subsets cover the fine decomposition.
bool refines(const Decomposition<StateVector>& fine, const Decomposition<StateVector>& coarse) {
    const std::size_t n = fine.size();
    std::vector<bool> used(n, false);
    for (std::size_t j = 0; j < coarse.size(); ++j) {
        const Eigen::VectorXcd c = coarse[j].coefficients();
        bool found = false;
        for (unsigned long mask = 1; mask < (1ul << n) && !found; ++mask) {
            bool clash = false;
            Eigen::VectorXcd s = Eigen::VectorXcd::Zero(c.size());
            for (std::size_t i = 0; i < n; ++i)
                if (mask >> i & 1ul) {
                    clash = clash || used[i];
                    s += fine[i].coefficients();
                }
            if (clash || (s - c).norm() > 1e-8 * std::max(1.0, c.norm())) continue;
            for (std::size_t i = 0; i < n; ++i)
                if (mask >> i & 1ul) used[i] = true;
            found = true;
        }
        if (!found) return false;
    }
    return std::all_of(used.begin(), used.end(), [](bool u) { return u; });
}

Outcome criterion5() {
    gen::Rng r(5150);
    long bij = 0, prefix = 0, transport = 0, ortho = 0;
    int made = 0, orthogonal_trees = 0;
    while (made < 500) {
        std::optional<gen::RandomTree> g;
        const bool orthogonal = r.uniform_int(0, 1) == 1;
        try {
            g.emplace(gen::random_tree(r, r.uniform_int(3, 6), r.uniform_int(1, 3), r.uniform_int(1, 8), orthogonal));
        } catch (const InvalidInput&) {
            continue;
        }
        ++made;
        const auto& T = g->tree;
        tree::BranchOptions bo;
        bo.require_orthogonal = false;
        const auto bs = tree::branches(T, bo);
        std::vector<int> hit(g->leaves, 0);
        for (const auto& b : bs) ++hit.at(b.leaf);
        if (bs.size() != g->leaves || std::any_of(hit.begin(), hit.end(), [](int h) { return h != 1; })) ++bij;
        for (const auto& b : bs) {
            // The element occupied at node i must be an ancestor of the one at node i+1.
            for (std::size_t i = 0; i + 1 < T.nodes.size(); ++i) {
                const auto& next = T.nodes[i + 1];
                const auto parent = T.nodes[i].decomposition.propagated(T.propagator, next.time - T.nodes[i].time)[b.path[i]];
                Eigen::VectorXcd s = Eigen::VectorXcd::Zero(parent.coefficients().size());
                for (std::size_t k = 0; k < next.decomposition.size(); ++k)
                    if (next.lineage->target[k] == b.path[i]) s += next.decomposition[k].coefficients();
                if (next.lineage->target[b.path[i + 1]] != b.path[i] ||
                    (s - parent.coefficients()).norm() > 1e-8 * parent.coefficients().norm())
                    ++prefix;
            }
        }
        const double horizon = T.nodes.back().time + 1.0;
        for (int k = 0; k < 3; ++k) {
            double t1 = r.uniform(0.0, horizon), t2 = r.uniform(0.0, horizon);
            if (t1 > t2) std::swap(t1, t2);
            const auto h2 = tree::hat_T(T, t2).decomposition;
            const auto h1 = tree::hat_T(T, t1).decomposition.propagated(T.propagator, t2 - t1);
            if (!refines(h2, h1)) ++transport;
        }
        if (orthogonal) {
            ++orthogonal_trees;
            for (const auto& node : T.nodes)
                for (std::size_t i = 0; i < node.decomposition.size(); ++i)
                    for (std::size_t j = i + 1; j < node.decomposition.size(); ++j) {
                        const auto& a = node.decomposition[i].coefficients();
                        const auto& b = node.decomposition[j].coefficients();
                        if (std::abs(a.dot(b)) > 1e-9 * a.norm() * b.norm()) ++ortho;
                    }
        }
    }
    return {bij + prefix + transport + ortho == 0,
            "violations: bijection " + std::to_string(bij) + ", prefix " + std::to_string(prefix) + ", transport " +
                std::to_string(transport) + ", orthogonality " + std::to_string(ortho) + " (" +
                std::to_string(orthogonal_trees) + " orthogonal trees)"};
}

Outcome criterion6() {
    auto c = runner::default_config(runner::ScenarioKind::gaussian);
    c.out_dir = workdir("branches").string();
    const auto rep = runner::run(c);
    const auto& br = rep.results()["branches"];
    const double t1 = rep.results()["t1"].is_null() ? -1.0 : rep.results()["t1"].get<double>();
    double perr = 0.0;
    for (const auto& b : br) perr = std::max(perr, std::abs(b["probability"].get<double>() - 0.5));
    const double dx = c.grid.box_length / static_cast<double>(c.grid.n_cells);
    double xerr = 0.0;
    std::size_t checked = 0;
    for (const auto& row : read_csv(fs::path(c.out_dir) / "trajectories.csv")) {
        const double t = row[0], x = row[1];
        if (t1 < 0.0 || t < t1) continue;
        const double sign = row[2] == 0.0 ? -1.0 : 1.0;  // leaf 0 is the left mover
        xerr = std::max(xerr, std::abs(x - sign * t * c.packet.p0 / c.packet.mass));
        ++checked;
    }
    return {br.size() == 2 && t1 > 0.0 && perr <= 1e-6 && checked > 0 && xerr <= 2.0 * dx,
            std::to_string(br.size()) + " branches, t1 = " + num(t1) + ", max |p - 1/2| = " + num(perr) +
                ", max trajectory error " + num(xerr) + " (2 dx = " + num(2.0 * dx) + ")"};
}

IntervalSet piece(double lo, bool lo_closed, double hi, bool hi_closed) {
    return IntervalSet({Interval{lo, hi, lo_closed, hi_closed}});
}

Outcome criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    gen::Rng r(777);
    long viol = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int m = r.uniform_int(3, 12);
        std::vector<double> pts, w;
        while (static_cast<int>(pts.size()) < m) {
            const double p = 0.5 * r.uniform_int(0, 20);
            if (std::find(pts.begin(), pts.end(), p) != pts.end()) continue;
            pts.push_back(p);
            w.push_back(r.uniform(0.01, 1.0));
        }
        const int n = r.uniform_int(1, 6);
        std::vector<double> cuts;
        while (static_cast<int>(cuts.size()) < n - 1) {
            const double c = r.uniform_int(0, 1) ? pts[static_cast<std::size_t>(r.uniform_int(0, m - 1))] : r.uniform(-1.0, 11.0);
            if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());
        std::vector<IntervalSet> base;
        std::vector<bool> left(cuts.size());
        for (auto&& l : left) l = r.uniform_int(0, 1) == 1;
        for (int i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            base.push_back(piece(i > 0 ? cuts[ui - 1] : -kInf, i > 0 && !left[ui - 1], i + 1 < n ? cuts[ui] : kInf,
                                 i + 1 < n && left[ui]));
        }
        const DiscreteScalarMeasure mu(pts, w);
        double total = 0.0;
        for (double x : w) total += x;
        const double eps = r.uniform(0.05, 0.5) * std::sqrt(total);
        const auto res = lab::corollary1_partition(mu, base, eps);

        // Exact partition, probed at every atom, every cut and points between them.
        std::vector<double> probes = pts;
        for (double c : cuts)
            for (double d : {-1e-9, 0.0, 1e-9}) probes.push_back(c + d);
        for (int k = 0; k < 200; ++k) probes.push_back(r.uniform(-5.0, 15.0));
        for (double x : probes) {
            int owners = 0;
            for (const auto& s : res.sigma) owners += s.contains(x) ? 1 : 0;
            if (owners != 1) ++viol;
        }
        // Residual of an index set: sqrt of the mass in Delta_I xor Sigma_I, by direct membership.
        auto residual = [&](unsigned I) {
            double mass = 0.0;
            for (std::size_t k = 0; k < pts.size(); ++k) {
                bool in_d = false, in_s = false;
                for (int i = 0; i < n; ++i)
                    if (I >> i & 1u) {
                        in_d = in_d || base[static_cast<std::size_t>(i)].contains(pts[k]);
                        in_s = in_s || res.sigma[static_cast<std::size_t>(i)].contains(pts[k]);
                    }
                if (in_d != in_s) mass += w[k];
            }
            return std::sqrt(mass);
        };
        for (unsigned I = 1; I + 1 < (1u << n); ++I)
            if (residual(I) > eps * (1.0 + 1e-12)) ++viol;
        const double delta = n == 1 ? eps : eps / (2.0 * (n - 1) * (n - 1));
        for (int i = 1; i <= n; ++i) {
            const double bound = i < n ? (2 * i - 1) * delta : (n - 1) * (n - 1) * delta;
            if (residual(1u << (i - 1)) > bound * (1.0 + 1e-12) + 1e-15) ++viol;
        }
    }
    const double secs = seconds_since(t0);
    return {viol == 0 && secs < 60.0, std::to_string(viol) + " violations in 200 instances, " + num(secs) + " s"};
}

Outcome criterion8() {
    auto c = runner::default_config(runner::ScenarioKind::scattering, "free");
    c.out_dir = workdir("theorem2").string();
    const auto rep = runner::run(c);
    const double transient = rep.results()["transient_time"].get<double>();
    const auto rows = read_csv(fs::path(c.out_dir) / "decay.csv");  // t, w_E, w_F, e_neg, e_pos, e_all
    double rise = 0.0, drift = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i - 1][0] >= transient) rise = std::max(rise, rows[i][1] - rows[i - 1][1]);
        drift = std::max(drift, std::abs(rows[i][2] - rows[0][2]));
    }
    const double final_w = rows.back()[1];
    return {rise <= 0.0 && final_w < 0.05 && drift <= 1e-10,
            "transient t = " + num(transient) + ", max rise after it " + num(rise) + ", w_E(" + num(rows.back()[0]) +
                ") = " + num(final_w) + ", control lane drift " + num(drift)};
}

Outcome criterion9() {
    const grid::GridSpec g(4096, 320.0);
    grid::GaussianPacketParams prm;
    prm.p0 = 2.0;
    const auto psi0 = grid::make_gaussian(prm, 1, g);
    const double n0 = psi0.coefficients().squaredNorm() * g.dx();
    auto psi = psi0;
    for (int k = 0; k < 1000; ++k) psi = grid::propagate_free(psi, 0.01);
    const double drift = std::abs(psi.coefficients().squaredNorm() * g.dx() - n0) / n0;

    const auto back = grid::propagate_free(grid::propagate_free(psi0, 7.5), -7.5);
    const double round_trip = (back.coefficients() - psi0.coefficients()).norm() / psi0.coefficients().norm();

    const grid::StrangPropagator strang(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.n_cells())), 0.05);
    const auto a = strang(psi0, 5.0), b = grid::propagate_free(psi0, 5.0);
    const double strang_err = (a.coefficients() - b.coefficients()).norm() / psi0.coefficients().norm();
    return {drift < 1e-10 && round_trip < 1e-12 && strang_err < 1e-8,
            "norm drift over 1000 steps " + num(drift) + ", U(t)U(-t) error " + num(round_trip) +
                ", Strang(V=0) vs free " + num(strang_err)};
}

Outcome criterion10() {
    std::vector<runner::ScenarioConfig> cfgs{runner::default_config(runner::ScenarioKind::gaussian),
                                             runner::default_config(runner::ScenarioKind::scattering, "free"),
                                             runner::default_config(runner::ScenarioKind::custom_tree),
                                             runner::default_config(runner::ScenarioKind::verify)};
    std::size_t compared = 0;
    std::string mismatch;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        auto a = cfgs[i], b = cfgs[i];
        a.out_dir = workdir("det_" + std::to_string(i) + "_a").string();
        b.out_dir = workdir("det_" + std::to_string(i) + "_b").string();
        const auto ra = runner::run(a), rb = runner::run(b);
        if (ra.files() != rb.files()) mismatch += " file lists differ for " + std::string(runner::to_string(a.kind)) + ";";
        for (const auto& f : ra.files()) {
            ++compared;
            if (slurp(fs::path(a.out_dir) / f) != slurp(fs::path(b.out_dir) / f)) mismatch += " " + f + " differs;";
        }
    }
    return {mismatch.empty() && compared > 0, std::to_string(compared) + " data files compared" + (mismatch.empty() ? "" : ":" + mismatch)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gaussian momentum overlap", criterion1},  {"gaussian spatial curve", criterion2},
        {"f(t) properties", criterion3},            {"finite property suite", criterion4},
        {"tree lemmas", criterion5},                {"branch reproduction", criterion6},
        {"continuity-set certificates", criterion7}, {"asymptotic decay, free lane", criterion8},
        {"propagator hygiene", criterion9},          {"determinism", criterion10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

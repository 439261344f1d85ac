#include "psd_runner/scenarios.hpp"

#include <psd/finite.hpp>
#include <psd/format.hpp>
#include <psd/measure_lab.hpp>
#include <psd/tree.hpp>

#include <algorithm>
#include <limits>
#include <random>

namespace psd::runner {

using finite::AtomicSpectralMeasure;
using finite::StateVector;
using nlohmann::json;

namespace {

const std::string kExactIffZero = "finite.exact_iff_zero";
const std::string kCoarsening = "finite.coarsening_monotone";
const std::string kOrthogonality = "finite.orthogonality_bound";
const std::string kHeuristic = "finite.heuristic_upper_bound";
const std::string kBorn = "finite.born";
const std::string kBijection = "tree.branch_bijection";
const std::string kPrefix = "tree.branch_prefix";
const std::string kTransport = "tree.refinement_transport";
const std::string kOrthoPropagation = "tree.orthogonality_propagation";
const std::string kCertificate = "certificate.corollary";

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    bool coin() { return integer(0, 1) == 1; }
    Eigen::VectorXcd vec(Eigen::Index d) {
        std::normal_distribution<double> n;
        Eigen::VectorXcd v(d);
        for (Eigen::Index i = 0; i < d; ++i) v[i] = {n(eng_), n(eng_)};
        return v;
    }
    Eigen::MatrixXcd unitary(Eigen::Index d) {
        Eigen::MatrixXcd A(d, d);
        for (Eigen::Index i = 0; i < d; ++i) A.col(i) = vec(d);
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
        return qr.householderQ() * Eigen::MatrixXcd::Identity(d, d);
    }
    template <class T>
    void shuffle(std::vector<T>& v) { std::shuffle(v.begin(), v.end(), eng_); }

private:
    std::mt19937_64 eng_;
};

// Tolerances of the check named by inject_fault are replaced by an unreachable value.
struct Faults {
    std::string target;
    double tol(const std::string& check, double value) const {
        return check == target ? -std::numeric_limits<double>::infinity() : value;
    }
    long allowed(const std::string& check) const { return check == target ? -1 : 0; }
};

struct Tally {
    long trials = 0;
    long violations = 0;
    double worst = 0.0;
    std::string first;
    void violate(const std::string& what) {
        if (violations++ == 0) first = what;
    }
};

void report_tally(RunReport& rep, const Faults& f, const std::string& name, const Tally& t, const std::string& what) {
    if (t.trials == 0) {
        rep.skip(name, "no trials");
        return;
    }
    const bool ok = t.violations <= f.allowed(name);
    std::string detail = std::to_string(t.violations) + " violations in " + std::to_string(t.trials) + " " + what;
    if (!t.first.empty()) detail += "; first: " + t.first;
    if (f.target == name) detail += " (fault injected)";
    rep.pass_if(name, ok, detail, {{"trials", t.trials}, {"violations", t.violations}, {"worst", t.worst}});
}

AtomicSpectralMeasure random_measure(Rng& r, int dim, int atoms) {
    const Eigen::MatrixXcd U = r.unitary(dim);
    std::vector<int> perm(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) perm[static_cast<std::size_t>(i)] = i;
    r.shuffle(perm);
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(atoms));
    for (int i = 0; i < dim; ++i)
        groups[static_cast<std::size_t>(i < atoms ? i : r.integer(0, atoms - 1))].push_back(perm[static_cast<std::size_t>(i)]);
    std::vector<Eigen::VectorXd> pts;
    for (int k = 0; k < atoms; ++k) pts.push_back(Eigen::VectorXd::Constant(1, k));
    return AtomicSpectralMeasure::from_basis(U, groups, pts);
}

// Projections of psi onto a random labeling of the atoms with every part nonzero.
std::vector<Eigen::VectorXcd> exact_parts(Rng& r, const AtomicSpectralMeasure& G, const Eigen::VectorXcd& psi, int n) {
    const int K = static_cast<int>(G.size());
    for (;;) {
        std::vector<int> lab(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) lab[static_cast<std::size_t>(k)] = k < n ? k : r.integer(0, n - 1);
        r.shuffle(lab);
        std::vector<Eigen::VectorXcd> parts(static_cast<std::size_t>(n), Eigen::VectorXcd::Zero(psi.size()));
        for (int k = 0; k < K; ++k)
            parts[static_cast<std::size_t>(lab[static_cast<std::size_t>(k)])] += G.atoms()[static_cast<std::size_t>(k)].projector * psi;
        bool ok = true;
        for (const auto& p : parts) ok = ok && p.norm() > 1e-3 * psi.norm();
        if (ok) return parts;
    }
}

Decomposition<StateVector> decomposition_of(const std::vector<Eigen::VectorXcd>& parts) {
    std::vector<StateVector> e;
    for (const auto& p : parts) e.emplace_back(p);
    return Decomposition<StateVector>(std::move(e));
}

// Elements the witness labeling reproduces: G(Delta_i) Psi for each label i.
double witness_residual(const AtomicSpectralMeasure& G, const Decomposition<StateVector>& D, const std::vector<int>& labels) {
    const Eigen::VectorXcd psi = D.sum().coefficients();
    double worst = 0.0;
    for (std::size_t i = 0; i < D.size(); ++i) {
        Eigen::VectorXcd g = Eigen::VectorXcd::Zero(psi.size());
        for (std::size_t k = 0; k < G.size(); ++k)
            if (labels[k] == static_cast<int>(i)) g += G.atoms()[k].projector * psi;
        worst = std::max(worst, (g - D[i].coefficients()).norm() / psi.norm());
    }
    return worst;
}

void finite_suite(RunReport& rep, const Faults& f, std::size_t trials, std::uint64_t seed) {
    Rng r(seed);
    Tally a, b, c, d, born;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const int dim = r.integer(2, 6);
        const int K = r.integer(2, dim);
        const int n = r.integer(2, std::min(3, K));
        const auto G = random_measure(r, dim, K);
        const Eigen::VectorXcd psi = r.vec(dim);
        const auto parts = exact_parts(r, G, psi, n);
        const std::string tag = "trial " + std::to_string(trial);

        // (a) exact => w = 0, and w = 0 => the witness reproduces the elements.
        const auto Dx = decomposition_of(parts);
        const auto wx = finite::brute_force_w(G, Dx);
        ++a.trials;
        a.worst = std::max(a.worst, wx.value);
        if (!(wx.value <= f.tol(kExactIffZero, 1e-9))) a.violate(tag + ": exact decomposition has w = " + format_double(wx.value));
        else if (witness_residual(G, Dx, wx.witness) > f.tol(kExactIffZero, 1e-8)) a.violate(tag + ": w = 0 witness does not reproduce");

        const auto bx = born_measure(Dx);
        double psum = 0.0;
        for (double p : bx.probabilities) psum += p;
        ++born.trials;
        born.worst = std::max(born.worst, std::abs(psum - 1.0));
        if (!bx.orthogonal || std::abs(psum - 1.0) > f.tol(kBorn, 1e-12))
            born.violate(tag + ": Born measure of an exact decomposition sums to " + format_double(psum));

        // Perturbed, sum-preserving: generic, so w > 0 and the other properties are nontrivial.
        auto pert = parts;
        const double sc = r.log_uniform(1e-4, 1.0) * psi.norm() / std::sqrt(static_cast<double>(dim));
        Eigen::VectorXcd drift = Eigen::VectorXcd::Zero(dim);
        for (std::size_t i = 0; i + 1 < pert.size(); ++i) {
            const Eigen::VectorXcd e = r.vec(dim) * sc;
            pert[i] += e;
            drift += e;
        }
        pert.back() -= drift;
        std::optional<Decomposition<StateVector>> Dp;
        try {
            Dp.emplace(decomposition_of(pert));
        } catch (const InvalidInput&) {
            continue;  // dependent draw
        }
        const auto wp = finite::brute_force_w(G, *Dp);
        if (wp.value <= 1e-9 && witness_residual(G, *Dp, wp.witness) > f.tol(kExactIffZero, 1e-8))
            a.violate(tag + ": perturbed decomposition has w = 0 without an exact witness");

        // (b) merging two elements cannot increase w.
        ++b.trials;
        if (Dp->size() == 2) {
            if (f.target == kCoarsening) b.violate(tag + ": fault injected");
        } else {
            const int i = r.integer(0, static_cast<int>(Dp->size()) - 1);
            int j = r.integer(0, static_cast<int>(Dp->size()) - 2);
            if (j >= i) ++j;
            CoarseningMap h{{}, Dp->size() - 1};
            std::size_t next = 0;
            std::vector<std::size_t> slot(Dp->size());
            for (std::size_t k = 0; k < Dp->size(); ++k)
                if (static_cast<int>(k) != j) slot[k] = next++;
            slot[static_cast<std::size_t>(j)] = slot[static_cast<std::size_t>(i)];
            h.target = slot;
            const auto wc = finite::brute_force_w(G, coarsen(*Dp, h));
            b.worst = std::max(b.worst, wc.value - wp.value);
            if (wc.value > wp.value + f.tol(kCoarsening, 1e-9))
                b.violate(tag + ": coarse w " + format_double(wc.value) + " > fine w " + format_double(wp.value));
        }

        // (c) |<Psi_I|Psi_J>| / (|Psi_I| |Psi_J|) <= 2w + w^2 for disjoint I, J.
        ++c.trials;
        const unsigned full = (1u << Dp->size()) - 1;
        const double bound = 2.0 * wp.value + wp.value * wp.value;
        double worst_excess = -bound;
        for (unsigned I = 1; I < full; ++I)
            for (unsigned J = 1; J < full; ++J) {
                if (I & J) continue;
                const auto si = Dp->subset_sum(I), sj = Dp->subset_sum(J);
                const double ov = std::abs(inner(si, sj)) / (norm(si) * norm(sj));
                worst_excess = std::max(worst_excess, ov - bound);
            }
        c.worst = std::max(c.worst, worst_excess);
        if (worst_excess > f.tol(kOrthogonality, 1e-9)) c.violate(tag + ": overlap exceeds 2w + w^2 by " + format_double(worst_excess));

        // (d) the heuristic never beats the exhaustive optimum.
        ++d.trials;
        const auto wh = minimize_partition(finite::cell_table(G, *Dp), false);
        d.worst = std::max(d.worst, wp.value - wh.value);
        if (wh.value < wp.value - f.tol(kHeuristic, 1e-12))
            d.violate(tag + ": heuristic " + format_double(wh.value) + " < brute force " + format_double(wp.value));
    }
    report_tally(rep, f, kExactIffZero, a, "finite instances");
    report_tally(rep, f, kCoarsening, b, "finite instances");
    report_tally(rep, f, kOrthogonality, c, "finite instances");
    report_tally(rep, f, kHeuristic, d, "finite instances");
    report_tally(rep, f, kBorn, born, "exact decompositions");
}

struct GeneratedTree {
    tree::SpatialTree<StateVector> T;
    std::size_t leaves = 1;
};

// Depth <= 3 and at most max_leaves leaves. Orthogonal trees split coordinate
// groups of U(t) Psi0 under a diagonal H; the others split by random vectors.
GeneratedTree random_tree(Rng& r, int dim, int depth, std::size_t max_leaves, bool orthogonal) {
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim, dim);
    if (orthogonal) {
        for (int i = 0; i < dim; ++i) H(i, i) = r.uniform(-2.0, 2.0);
    } else {
        Eigen::MatrixXcd A(dim, dim);
        for (int i = 0; i < dim; ++i) A.col(i) = r.vec(dim);
        H = 0.5 * (A + A.adjoint());
    }
    const Propagator<StateVector> U = finite::HamiltonianPropagator(H);
    GeneratedTree out{{StateVector(r.vec(dim)), {}, U}, 1};
    std::vector<Eigen::VectorXcd> cur{out.T.root.coefficients()};
    std::vector<std::vector<int>> groups(1);
    for (int i = 0; i < dim; ++i) groups[0].push_back(i);
    double t = r.uniform(0.0, 0.5), t_prev = 0.0;
    for (int s = 0; s < depth; ++s) {
        if (s > 0) t += r.uniform(0.1, 1.0);
        for (auto& v : cur) v = U(StateVector(v), t - t_prev).coefficients();
        t_prev = t;
        std::vector<Eigen::VectorXcd> next;
        std::vector<std::vector<int>> next_groups;
        std::vector<std::size_t> target;
        std::size_t budget = max_leaves - cur.size();
        for (std::size_t j = 0; j < cur.size(); ++j) {
            const std::size_t cap = orthogonal ? groups[j].size() : static_cast<std::size_t>(dim);
            std::size_t k = 1;
            if (budget > 0 && cap > 1) k += static_cast<std::size_t>(r.integer(0, static_cast<int>(std::min({budget, cap - 1, std::size_t{2}}))));
            budget -= k - 1;
            if (orthogonal) {
                auto g = groups[j];
                r.shuffle(g);
                std::vector<std::vector<int>> parts(k);
                for (std::size_t q = 0; q < g.size(); ++q) parts[q < k ? q : static_cast<std::size_t>(r.integer(0, static_cast<int>(k) - 1))].push_back(g[q]);
                for (auto& p : parts) {
                    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
                    for (int q : p) v[q] = cur[j][q];
                    next.push_back(v);
                    next_groups.push_back(p);
                    target.push_back(j);
                }
            } else {
                Eigen::VectorXcd rest = cur[j];
                for (std::size_t q = 0; q + 1 < k; ++q) {
                    const Eigen::VectorXcd piece = r.vec(dim) * (cur[j].norm() / std::sqrt(static_cast<double>(dim)));
                    next.push_back(piece);
                    rest -= piece;
                    target.push_back(j);
                    next_groups.emplace_back();
                }
                next.push_back(rest);
                target.push_back(j);
                next_groups.emplace_back();
            }
        }
        std::vector<StateVector> elems;
        for (const auto& v : next) elems.emplace_back(v);
        out.T.nodes.push_back({t, Decomposition<StateVector>(std::move(elems)), CoarseningMap{target, cur.size()}});
        cur = std::move(next);
        groups = std::move(next_groups);
    }
    out.leaves = cur.size();
    return out;
}

void tree_suite(RunReport& rep, const Faults& f, std::size_t trials, std::uint64_t seed) {
    Rng r(seed);
    Tally bij, pre, tr, orth;
    std::size_t generated = 0;
    while (generated < trials) {
        const bool orthogonal = r.coin();
        const int dim = r.integer(3, 6);
        std::optional<GeneratedTree> g;
        try {
            g.emplace(random_tree(r, dim, r.integer(1, 3), static_cast<std::size_t>(r.integer(1, 8)), orthogonal));
        } catch (const InvalidInput&) {
            continue;  // dependent random split
        }
        const std::string tag = "tree " + std::to_string(generated++);
        const auto& T = g->T;
        const auto v = tree::validate_tree(T);
        tree::BranchOptions bo;
        bo.require_orthogonal = false;

        ++bij.trials;
        ++pre.trials;
        std::vector<tree::Branch> bs;
        if (v.valid) bs = tree::branches(T, bo);
        std::vector<int> seen(g->leaves, 0);
        for (const auto& b : bs)
            if (b.leaf < seen.size()) ++seen[b.leaf];
        bool bijective = v.valid && bs.size() == g->leaves && std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
        if (f.target == kBijection) bijective = false;
        if (!bijective) bij.violate(tag + (v.valid ? ": branches do not match leaves" : ": " + v.issues.front()));

        bool prefix = v.valid;
        for (const auto& b : bs)
            for (std::size_t i = 1; i < T.nodes.size(); ++i)
                prefix = prefix && T.nodes[i].lineage->target[b.path[i]] == b.path[i - 1];
        if (f.target == kPrefix) prefix = false;
        if (!prefix) pre.violate(tag + ": branch path leaves its lineage");

        // hat_T(t2) must refine U(t2 - t1) hat_T(t1).
        const double horizon = T.nodes.back().time + 1.0;
        for (int k = 0; k < 3; ++k) {
            double t1 = r.uniform(0.0, horizon), t2 = r.uniform(0.0, horizon);
            if (t1 > t2) std::swap(t1, t2);
            if (t1 == t2) continue;
            ++tr.trials;
            const auto h2 = tree::hat_T(T, t2), h1 = tree::hat_T(T, t1);
            bool ok = is_finer(h2.decomposition, h1.decomposition.propagated(T.propagator, t2 - t1)).has_value();
            if (h2.decomposition.size() < h1.decomposition.size()) ok = false;
            if (f.target == kTransport) ok = false;
            if (!ok) tr.violate(tag + ": hat_T(" + format_double(t2) + ") does not refine the transported hat_T(" + format_double(t1) + ")");
        }

        if (v.last_orthogonal) {
            ++orth.trials;
            double worst = 0.0;
            for (const auto& node : T.nodes) worst = std::max(worst, max_normalized_overlap(node.decomposition));
            orth.worst = std::max(orth.worst, worst);
            if (!v.orthogonality_propagates || worst > f.tol(kOrthoPropagation, 1e-5))
                orth.violate(tag + ": ancestor overlap " + format_double(worst) + " under orthogonal leaves");
        }
    }
    report_tally(rep, f, kBijection, bij, "trees");
    report_tally(rep, f, kPrefix, pre, "trees");
    report_tally(rep, f, kTransport, tr, "time pairs");
    report_tally(rep, f, kOrthoPropagation, orth, "trees with orthogonal leaves");
}

// Random partition of the line into n intervals whose cut points often sit on atoms.
std::vector<IntervalSet> random_partition(Rng& r, const std::vector<double>& atoms, int n) {
    std::vector<double> cuts;
    while (static_cast<int>(cuts.size()) < n - 1) {
        const double c = r.coin() ? atoms[static_cast<std::size_t>(r.integer(0, static_cast<int>(atoms.size()) - 1))]
                                  : r.uniform(-1.0, 11.0);
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<IntervalSet> sets;
    std::vector<bool> left_owns;  // cut i belongs to the set on its left
    for (std::size_t i = 0; i < cuts.size(); ++i) left_owns.push_back(r.coin());
    for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        Interval iv;
        if (i > 0) {
            iv.lo = cuts[ui - 1];
            iv.lo_closed = !left_owns[ui - 1];
        }
        if (i + 1 < n) {
            iv.hi = cuts[ui];
            iv.hi_closed = left_owns[ui];
        }
        sets.push_back(IntervalSet({iv}));
    }
    return sets;
}

void certificate_suite(RunReport& rep, const Faults& f, std::size_t trials, std::uint64_t seed) {
    Rng r(seed);
    Tally t;
    json certs = json::array();
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const int m = r.integer(3, 12);
        std::vector<double> pts, w;
        for (int k = 0; k < m; ++k) {
            // Half-integer lattice so cuts and atoms coincide often.
            double p = 0.5 * r.integer(0, 20);
            while (std::find(pts.begin(), pts.end(), p) != pts.end()) p = 0.5 * r.integer(0, 20);
            pts.push_back(p);
            w.push_back(r.uniform(0.01, 1.0));
        }
        const int n = r.integer(1, 6);
        const auto base = random_partition(r, pts, n);
        const std::string tag = "instance " + std::to_string(trial);
        ++t.trials;
        try {
            lab::Corollary1Result res;
            if (trial % 4 == 3) {
                // Vector route: coordinate measure at the atoms, random state.
                std::vector<Eigen::VectorXd> at;
                for (double p : pts) at.push_back(Eigen::VectorXd::Constant(1, p));
                const auto G = AtomicSpectralMeasure::coordinate(static_cast<std::size_t>(m), at);
                const StateVector psi(r.vec(m));
                const double eps = r.uniform(0.05, 0.5) * norm(psi);
                res = lab::corollary1_partition(G, psi, base, eps);
            } else {
                const DiscreteScalarMeasure mu(pts, w);
                const double eps = r.uniform(0.05, 0.5) * std::sqrt(mu.total());
                res = lab::corollary1_partition(mu, base, eps);
            }
            const auto& c = res.certificate;
            bool ok = c.exact_partition && c.max_subset_residual <= f.tol(kCertificate, c.epsilon * (1.0 + 1e-12));
            for (std::size_t i = 0; i < c.per_stage_residuals.size(); ++i)
                ok = ok && c.per_stage_residuals[i] <= c.per_stage_bounds[i] * (1.0 + 1e-12) + 1e-15;
            t.worst = std::max(t.worst, c.max_subset_residual / c.epsilon);
            if (!ok) t.violate(tag + ": certificate fails (max residual " + format_double(c.max_subset_residual) + ", eps " + format_double(c.epsilon) + ")");
            certs.push_back(lab::to_json(c));
        } catch (const NotFound& e) {
            t.violate(tag + ": " + e.what());
        }
    }
    write_output(rep, "certificate.json", json{{"instances", certs}}.dump(2) + "\n");
    report_tally(rep, f, kCertificate, t, "certificate instances");
}

}  // namespace

const std::vector<std::string>& fault_names() {
    static const std::vector<std::string> names{kExactIffZero, kCoarsening, kOrthogonality, kHeuristic, kBorn,
                                                kBijection,    kPrefix,     kTransport,     kOrthoPropagation, kCertificate};
    return names;
}

void run_verify(RunReport& rep) {
    const auto& c = rep.config();
    Faults f{c.verify.inject_fault};
    if (!f.target.empty() && std::find(fault_names().begin(), fault_names().end(), f.target) == fault_names().end()) {
        std::string all;
        for (const auto& n : fault_names()) all += (all.empty() ? "" : ", ") + n;
        throw ConfigError("unknown inject_fault target '" + f.target + "'; expected one of " + all);
    }
    if (!f.target.empty()) rep.warn("fault injected into " + f.target);
    // Independent streams, so changing one trial count leaves the other suites unchanged.
    finite_suite(rep, f, c.verify.finite_trials, c.seed * 0x9e3779b97f4a7c15ULL + 1);
    tree_suite(rep, f, c.verify.tree_trials, c.seed * 0x9e3779b97f4a7c15ULL + 2);
    certificate_suite(rep, f, c.verify.certificate_trials, c.seed * 0x9e3779b97f4a7c15ULL + 3);
}

}  // namespace psd::runner

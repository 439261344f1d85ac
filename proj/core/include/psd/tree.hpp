#pragma once

#include "psd/decomposition.hpp"
#include "psd/error.hpp"
#include "psd/proximity.hpp"
#include "psd/state.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace psd::tree {

// lineage maps the elements of this node into the elements of the previous
// node propagated to this node's time (into the singleton root for node 0).
template <HilbertState S>
struct TreeNode {
    double time = 0.0;
    Decomposition<S> decomposition;
    std::optional<CoarseningMap> lineage;
};

template <HilbertState S>
struct SpatialTree {
    S root;
    std::vector<TreeNode<S>> nodes;
    Propagator<S> propagator;

    // Builds lineage maps by is_finer search (for trees loaded without them).
    static SpatialTree infer(S root, std::vector<std::pair<double, Decomposition<S>>> stages, Propagator<S> U) {
        SpatialTree T{std::move(root), {}, std::move(U)};
        for (std::size_t i = 0; i < stages.size(); ++i) {
            auto& [t, D] = stages[i];
            std::optional<CoarseningMap> h;
            if (i == 0) {
                h = CoarseningMap{std::vector<std::size_t>(D.size(), 0), 1};
            } else {
                const auto& prev = T.nodes.back();
                h = is_finer(D, prev.decomposition.propagated(T.propagator, t - prev.time));
            }
            T.nodes.push_back(TreeNode<S>{t, std::move(D), h});
        }
        return T;
    }
};

struct TreeValidation {
    bool valid = true;
    std::vector<std::string> issues;
    double worst_root_residual = 0.0;     // relative ||Sum D_i - U(t_i) Psi0||
    double worst_lineage_residual = 0.0;  // relative, over lineage groups
    bool last_orthogonal = false;
    bool orthogonality_propagates = true;  // checked only when the last node is orthogonal
};

template <HilbertState S>
TreeValidation validate_tree(const SpatialTree<S>& T, double tol = 1e-8, double ortho_tol = 1e-6) {
    TreeValidation v;
    auto fail = [&v](std::string msg) {
        v.valid = false;
        v.issues.push_back(std::move(msg));
    };
    const double root_norm = norm(T.root);
    if (!(root_norm > 0.0)) fail("root state has zero norm");
    for (std::size_t i = 0; i < T.nodes.size(); ++i) {
        const auto& node = T.nodes[i];
        if (!node.decomposition[0].compatible(T.root)) {
            fail("node " + std::to_string(i) + " lives in a different space than the root");
            return v;
        }
        if (i == 0 && node.time < 0.0) fail("first node time is negative");
        if (i > 0 && !(node.time > T.nodes[i - 1].time)) fail("node times are not strictly increasing at node " + std::to_string(i));
    }
    if (!v.valid) return v;

    for (std::size_t i = 0; i < T.nodes.size(); ++i) {
        const auto& node = T.nodes[i];
        const S expected = T.propagator(T.root, node.time);
        const double res = norm(subtract(node.decomposition.sum(), expected)) / root_norm;
        v.worst_root_residual = std::max(v.worst_root_residual, res);
        // Tolerance grows with the number of refinement steps behind this node.
        if (res > tol * static_cast<double>(i + 1)) fail("node " + std::to_string(i) + " does not sum to U(t) Psi0");

        if (i == 0) continue;
        const auto& prev = T.nodes[i - 1];
        const auto coarse = prev.decomposition.propagated(T.propagator, node.time - prev.time);
        std::optional<CoarseningMap> h = node.lineage ? is_finer(node.decomposition, coarse, *node.lineage, tol)
                                                      : is_finer(node.decomposition, coarse, tol);
        if (!h) {
            fail("node " + std::to_string(i) + " is not finer than the propagated node " + std::to_string(i - 1));
            continue;
        }
        for (std::size_t j = 0; j < coarse.size(); ++j) {
            Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(coarse[j].coefficients().size());
            for (std::size_t k = 0; k < h->target.size(); ++k)
                if (h->target[k] == j) acc += node.decomposition[k].coefficients();
            const double r = (acc - coarse[j].coefficients()).norm() / std::max(coarse[j].coefficients().norm(), 1e-300);
            v.worst_lineage_residual = std::max(v.worst_lineage_residual, r);
        }
    }
    if (!T.nodes.empty()) {
        v.last_orthogonal = max_normalized_overlap(T.nodes.back().decomposition) <= ortho_tol;
        if (v.last_orthogonal) {
            // Ancestors are sums of nearly orthogonal leaves, so their overlap can
            // exceed the leaf tolerance by a factor of order sqrt(#leaves).
            for (std::size_t i = 0; i + 1 < T.nodes.size(); ++i)
                if (max_normalized_overlap(T.nodes[i].decomposition) > ortho_tol * 10.0) {
                    v.orthogonality_propagates = false;
                    fail("node " + std::to_string(i) + " is not orthogonal although the last node is");
                }
        }
    }
    return v;
}

template <HilbertState S>
struct HatT {
    Decomposition<S> decomposition;
    int node = -1;  // -1 before the first node time
};

template <HilbertState S>
HatT<S> hat_T(const SpatialTree<S>& T, double t) {
    if (!(t >= 0.0)) throw InvalidInput("hat_T needs t >= 0");
    int idx = -1;
    for (std::size_t i = 0; i < T.nodes.size(); ++i)
        if (T.nodes[i].time <= t) idx = static_cast<int>(i);
    if (idx < 0) return {Decomposition<S>({T.propagator(T.root, t)}), -1};
    const auto& node = T.nodes[static_cast<std::size_t>(idx)];
    if (t == node.time) return {node.decomposition, idx};
    return {node.decomposition.propagated(T.propagator, t - node.time), idx};
}

struct Branch {
    std::size_t leaf = 0;
    std::vector<std::size_t> path;  // element index occupied at each node
    double probability = 1.0;
};

struct BranchOptions {
    bool require_orthogonal = true;
    double ortho_tol = 1e-6;
};

template <HilbertState S>
std::vector<Branch> branches(const SpatialTree<S>& T, const BranchOptions& opts = {}) {
    const auto v = validate_tree(T);
    if (!v.valid) throw InvalidInput("branches: invalid tree: " + v.issues.front());
    if (T.nodes.empty()) return {Branch{0, {}, 1.0}};
    const auto& last = T.nodes.back().decomposition;
    const auto born = born_measure(last, opts.ortho_tol);
    if (opts.require_orthogonal && !born.orthogonal)
        throw InvalidInput("branches: last decomposition is not orthogonal (max overlap " + std::to_string(born.max_overlap) + ")");

    // Lineage maps, re-derived through validation semantics when absent.
    std::vector<CoarseningMap> maps(T.nodes.size());
    for (std::size_t i = 0; i < T.nodes.size(); ++i) {
        if (T.nodes[i].lineage) {
            maps[i] = *T.nodes[i].lineage;
        } else if (i == 0) {
            maps[i] = CoarseningMap{std::vector<std::size_t>(T.nodes[0].decomposition.size(), 0), 1};
        } else {
            const auto& prev = T.nodes[i - 1];
            maps[i] = *is_finer(T.nodes[i].decomposition, prev.decomposition.propagated(T.propagator, T.nodes[i].time - prev.time));
        }
    }
    std::vector<Branch> out;
    for (std::size_t leaf = 0; leaf < last.size(); ++leaf) {
        Branch b;
        b.leaf = leaf;
        b.probability = born.probabilities[leaf];
        b.path.assign(T.nodes.size(), 0);
        std::size_t cur = leaf;
        for (std::size_t i = T.nodes.size(); i-- > 0;) {
            b.path[i] = cur;
            cur = maps[i].target[cur];
        }
        out.push_back(std::move(b));
    }
    return out;
}

// Phi(t): the element of hat_T(t) occupied by the branch.
template <HilbertState S>
S branch_state(const SpatialTree<S>& T, const Branch& b, double t) {
    if (!(t >= 0.0)) throw InvalidInput("branch_state needs t >= 0");
    int idx = -1;
    for (std::size_t i = 0; i < T.nodes.size(); ++i)
        if (T.nodes[i].time <= t) idx = static_cast<int>(i);
    if (idx < 0) return T.propagator(T.root, t);
    const auto& node = T.nodes[static_cast<std::size_t>(idx)];
    const S& e = node.decomposition[b.path[static_cast<std::size_t>(idx)]];
    return t == node.time ? e : T.propagator(e, t - node.time);
}

struct TreeWReport {
    WReport sampled;               // sup over samples of w(hat_T(t))
    double max_over_nodes = 0.0;   // max_i sup over samples t >= t_i of w(U(t - t_i) D_i)
    bool consistent = true;        // the two agree within 1e-9
};

template <HilbertState S>
TreeWReport w_plus_tree(const SpatialTree<S>& T, const WEvaluator<S>& eval, const std::vector<double>& times) {
    if (times.empty()) throw InvalidInput("w_plus_tree needs a nonempty time grid");
    const auto v = validate_tree(T);
    if (!v.valid) throw InvalidInput("w_plus_tree: invalid tree: " + v.issues.front());
    TreeWReport out;
    out.sampled.value = -1.0;
    for (double t : times) {
        auto h = hat_T(T, t);
        WReport r = h.decomposition.size() == 1 ? WReport{} : eval(h.decomposition);
        if (h.decomposition.size() == 1) r.witness.clear();
        if (r.value > out.sampled.value) {
            r.achieving_time = t;
            out.sampled = std::move(r);
        }
    }
    // Singleton decompositions contribute 0, so only the nodes matter.
    for (const auto& node : T.nodes) {
        for (double t : times) {
            if (t < node.time) continue;
            const auto D = t == node.time ? node.decomposition : node.decomposition.propagated(T.propagator, t - node.time);
            out.max_over_nodes = std::max(out.max_over_nodes, D.size() == 1 ? 0.0 : eval(D).value);
        }
    }
    out.consistent = std::abs(out.max_over_nodes - out.sampled.value) <= 1e-9;
    out.sampled.notes.push_back("sampled sup over " + std::to_string(times.size()) + " times; the true sup over [0, inf) is not claimed");
    return out;
}

// {root_norm2, nodes: [{t, elements: [{id, parent_id, norm2, prob, centroid}]}]}
// Ids: root is 0, then elements numbered in node order.
template <HilbertState S>
nlohmann::json tree_json(const SpatialTree<S>& T, const std::function<std::optional<double>(const S&)>& centroid = {}) {
    nlohmann::json j;
    j["root_norm2"] = norm2(T.root);
    j["nodes"] = nlohmann::json::array();
    std::vector<long> prev_ids{0};
    long next_id = 1;
    for (std::size_t i = 0; i < T.nodes.size(); ++i) {
        const auto& node = T.nodes[i];
        CoarseningMap h;
        if (node.lineage) {
            h = *node.lineage;
        } else if (i == 0) {
            h = CoarseningMap{std::vector<std::size_t>(node.decomposition.size(), 0), 1};
        } else {
            const auto& prev = T.nodes[i - 1];
            auto found = is_finer(node.decomposition, prev.decomposition.propagated(T.propagator, node.time - prev.time));
            if (!found) throw InvalidInput("tree_json: node " + std::to_string(i) + " has no lineage");
            h = *found;
        }
        const double total = norm2(node.decomposition.sum());
        nlohmann::json jn;
        jn["t"] = node.time;
        jn["elements"] = nlohmann::json::array();
        std::vector<long> ids;
        for (std::size_t k = 0; k < node.decomposition.size(); ++k) {
            const auto& e = node.decomposition[k];
            nlohmann::json je;
            je["id"] = next_id;
            je["parent_id"] = prev_ids.at(h.target[k]);
            je["norm2"] = norm2(e);
            je["prob"] = norm2(e) / total;
            std::optional<double> c = centroid ? centroid(e) : std::nullopt;
            je["centroid"] = c ? nlohmann::json(*c) : nlohmann::json(nullptr);
            jn["elements"].push_back(je);
            ids.push_back(next_id++);
        }
        j["nodes"].push_back(jn);
        prev_ids = std::move(ids);
    }
    return j;
}

}  // namespace psd::tree

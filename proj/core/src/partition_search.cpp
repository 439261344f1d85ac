#include "psd/partition_search.hpp"

#include "psd/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace psd {

const char* to_string(WMethod m) {
    switch (m) {
        case WMethod::exact_two: return "exact-two";
        case WMethod::heuristic: return "heuristic";
        case WMethod::brute_force: return "brute-force";
        case WMethod::trivial_single: return "trivial-single";
    }
    return "unknown";
}

nlohmann::json to_json(const WReport& r) {
    nlohmann::json j;
    j["value"] = r.value;
    j["method"] = to_string(r.method);
    j["certified"] = r.certified;
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < r.witness.size();) {
        std::size_t k = i;
        while (k < r.witness.size() && r.witness[k] == r.witness[i]) ++k;
        runs.push_back({r.witness[i], k - i});
        i = k;
    }
    j["witness"] = runs;
    if (r.achieving_time) j["achieving_time"] = *r.achieving_time;
    if (!r.notes.empty()) j["notes"] = r.notes;
    return j;
}

CellTable::CellTable(const std::vector<Eigen::MatrixXcd>& fibers, std::size_t n_elements) {
    if (n_elements < 1) throw InvalidInput("cell table needs at least one element");
    if (n_elements > kMaxElements)
        throw ResourceLimit("cell table supports at most " + std::to_string(kMaxElements) + " elements");
    n_ = n_elements;
    cells_ = fibers.size();
    const std::size_t S = subsets();
    mass_.assign(cells_ * S, 0.0);
    for (std::size_t k = 0; k < cells_; ++k) {
        const auto& F = fibers[k];
        if (F.rows() == 0) continue;
        if (static_cast<std::size_t>(F.cols()) != n_) throw InvalidInput("fiber column count mismatch");
        // Subset sums built incrementally from the lowest set bit.
        std::vector<Eigen::VectorXcd> sums(S, Eigen::VectorXcd::Zero(F.rows()));
        for (unsigned I = 1; I < S; ++I) {
            const unsigned low = I & (~I + 1);
            const int bit = std::countr_zero(low);
            sums[I] = sums[I ^ low] + F.col(bit);
            mass_[k * S + I] = sums[I].squaredNorm();
        }
    }
    finish();
}

CellTable CellTable::from_amplitudes(const Eigen::MatrixXcd& amp) {
    CellTable t;
    const auto n = static_cast<std::size_t>(amp.cols());
    if (n < 1) throw InvalidInput("cell table needs at least one element");
    if (n > kMaxElements)
        throw ResourceLimit("cell table supports at most " + std::to_string(kMaxElements) + " elements");
    t.n_ = n;
    t.cells_ = static_cast<std::size_t>(amp.rows());
    const std::size_t S = t.subsets();
    t.mass_.assign(t.cells_ * S, 0.0);
    std::vector<std::complex<double>> sums(S);
    for (std::size_t k = 0; k < t.cells_; ++k) {
        sums[0] = 0.0;
        for (unsigned I = 1; I < S; ++I) {
            const unsigned low = I & (~I + 1);
            const int bit = std::countr_zero(low);
            sums[I] = sums[I ^ low] + amp(static_cast<Eigen::Index>(k), bit);
            t.mass_[k * S + I] = std::norm(sums[I]);
        }
    }
    t.finish();
    return t;
}

void CellTable::finish() {
    const std::size_t S = subsets();
    total_.assign(S, 0.0);
    active_.clear();
    for (std::size_t k = 0; k < cells_; ++k) {
        bool any = false;
        for (unsigned I = 1; I < S; ++I) {
            total_[I] += mass_[k * S + I];
            any = any || mass_[k * S + I] > 0.0;
        }
        if (any) active_.push_back(k);
    }
}

namespace {

// Contribution of cell k with label a to ||Psi_I - G(Delta_I)Psi||^2: inside
// Delta_I the residual is -P_k Psi_{I^c}, outside it is P_k Psi_I.
inline double contribution(const CellTable& t, std::size_t k, int a, unsigned I) {
    return (I >> a & 1u) ? t.mass(k, t.full_mask() & ~I) : t.mass(k, I);
}

void check_totals(const CellTable& t) {
    for (unsigned I = 1; I < t.full_mask(); ++I)
        if (!(t.total(I) > 0.0))
            throw InvalidInput("a subset sum Psi_I has zero norm (decomposition is linearly dependent)");
}

double ratio_max(const CellTable& t, const std::vector<double>& cost) {
    double worst = 0.0;
    for (unsigned I = 1; I < t.full_mask(); ++I) worst = std::max(worst, cost[I] / t.total(I));
    return worst;
}

std::vector<double> costs(const CellTable& t, const std::vector<int>& labels) {
    std::vector<double> cost(t.subsets(), 0.0);
    for (std::size_t k : t.active_cells())
        for (unsigned I = 1; I < t.full_mask(); ++I) cost[I] += contribution(t, k, labels[k], I);
    return cost;
}

}  // namespace

double assignment_objective2(const CellTable& t, const std::vector<int>& labels) {
    if (labels.size() != t.cells()) throw InvalidInput("assignment length does not match cell count");
    for (int a : labels)
        if (a < 0 || static_cast<std::size_t>(a) >= t.n()) throw InvalidInput("assignment label out of range");
    if (t.n() == 1) return 0.0;
    check_totals(t);
    return ratio_max(t, costs(t, labels));
}

WReport hahn_two(const CellTable& t) {
    if (t.n() != 2) throw InvalidInput("hahn_two needs exactly two elements");
    check_totals(t);
    WReport r;
    r.method = WMethod::exact_two;
    r.certified = true;
    r.witness.assign(t.cells(), 0);
    double overlap = 0.0;
    for (std::size_t k = 0; k < t.cells(); ++k) {
        const double m1 = t.mass(k, 1u), m2 = t.mass(k, 2u);
        if (m2 > m1) r.witness[k] = 1;  // ties stay on element 1's side
        overlap += std::min(m1, m2);
    }
    r.value = std::sqrt(overlap / std::min(t.total(1u), t.total(2u)));
    return r;
}

WReport heuristic_partition(const CellTable& t) {
    if (t.n() < 2) throw InvalidInput("heuristic partition needs at least two elements");
    check_totals(t);
    std::vector<int> labels(t.cells(), 0);
    for (std::size_t k : t.active_cells()) {
        int best = 0;
        for (std::size_t i = 1; i < t.n(); ++i)
            if (t.mass(k, 1u << i) > t.mass(k, 1u << best)) best = static_cast<int>(i);
        labels[k] = best;
    }
    std::vector<double> cost = costs(t, labels);
    double obj = ratio_max(t, cost);
    std::vector<double> trial(cost.size());
    for (std::size_t k : t.active_cells()) {
        int best_label = labels[k];
        double best_obj = obj;
        for (std::size_t b = 0; b < t.n(); ++b) {
            if (static_cast<int>(b) == labels[k]) continue;
            double o = 0.0;
            for (unsigned I = 1; I < t.full_mask(); ++I) {
                trial[I] = cost[I] - contribution(t, k, labels[k], I) + contribution(t, k, static_cast<int>(b), I);
                o = std::max(o, trial[I] / t.total(I));
            }
            if (o < best_obj) {
                best_obj = o;
                best_label = static_cast<int>(b);
            }
        }
        if (best_label != labels[k]) {
            for (unsigned I = 1; I < t.full_mask(); ++I)
                cost[I] += contribution(t, k, best_label, I) - contribution(t, k, labels[k], I);
            labels[k] = best_label;
            obj = ratio_max(t, cost);
        }
    }
    WReport r;
    r.method = WMethod::heuristic;
    r.certified = false;
    r.value = std::sqrt(std::max(0.0, obj));
    r.witness = std::move(labels);
    r.notes.push_back("heuristic value is an upper bound on the infimum");
    return r;
}

namespace {

struct Search {
    const CellTable& t;
    std::vector<std::size_t> order;
    std::vector<std::vector<double>> suffix_min;  // suffix_min[d][I]: optimistic cost of cells order[d..]
    std::vector<int> labels;
    std::vector<int> best_labels;
    double best;

    void dfs(std::size_t depth, std::vector<double>& cost) {
        double lb = 0.0;
        for (unsigned I = 1; I < t.full_mask(); ++I) lb = std::max(lb, (cost[I] + suffix_min[depth][I]) / t.total(I));
        if (lb >= best) return;
        if (depth == order.size()) {
            best = lb;
            best_labels = labels;
            return;
        }
        const std::size_t k = order[depth];
        for (std::size_t a = 0; a < t.n(); ++a) {
            for (unsigned I = 1; I < t.full_mask(); ++I) cost[I] += contribution(t, k, static_cast<int>(a), I);
            labels[k] = static_cast<int>(a);
            dfs(depth + 1, cost);
            for (unsigned I = 1; I < t.full_mask(); ++I) cost[I] -= contribution(t, k, static_cast<int>(a), I);
        }
        labels[k] = 0;
    }
};

}  // namespace

WReport exhaustive_partition(const CellTable& t, std::size_t max_cells) {
    if (t.cells() > max_cells)
        throw ResourceLimit("exhaustive partition search limited to " + std::to_string(max_cells) + " cells, got " +
                            std::to_string(t.cells()));
    if (t.n() < 2) throw InvalidInput("exhaustive partition needs at least two elements");
    check_totals(t);
    const WReport seed = heuristic_partition(t);

    Search s{t, t.active_cells(), {}, std::vector<int>(t.cells(), 0), seed.witness, 0.0};
    // Heavy cells first tightens the bound early.
    std::stable_sort(s.order.begin(), s.order.end(),
                     [&](std::size_t a, std::size_t b) { return t.mass(a, t.full_mask()) > t.mass(b, t.full_mask()); });
    s.suffix_min.assign(s.order.size() + 1, std::vector<double>(t.subsets(), 0.0));
    for (std::size_t d = s.order.size(); d-- > 0;) {
        const std::size_t k = s.order[d];
        for (unsigned I = 1; I < t.full_mask(); ++I)
            s.suffix_min[d][I] = s.suffix_min[d + 1][I] + std::min(t.mass(k, I), t.mass(k, t.full_mask() & ~I));
    }
    // Seed slightly above the heuristic so an equal-valued optimum is still recorded.
    s.best = seed.value * seed.value * (1.0 + 1e-12) + 1e-300;
    std::vector<double> cost(t.subsets(), 0.0);
    s.dfs(0, cost);

    WReport r;
    r.method = WMethod::brute_force;
    r.certified = true;
    r.witness = s.best_labels;
    r.value = std::sqrt(std::max(0.0, assignment_objective2(t, r.witness)));
    return r;
}

WReport minimize_partition(const CellTable& t, bool exact, std::size_t max_cells) {
    if (t.n() == 1) {
        WReport r;
        r.method = WMethod::trivial_single;
        r.certified = true;
        r.value = 0.0;
        r.witness.assign(t.cells(), 0);
        return r;
    }
    if (t.n() == 2) return hahn_two(t);
    if (exact) return exhaustive_partition(t, max_cells);
    return heuristic_partition(t);
}

}  // namespace psd

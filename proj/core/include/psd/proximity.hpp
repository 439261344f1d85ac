#pragma once

#include "psd/decomposition.hpp"
#include "psd/finite.hpp"
#include "psd/grid.hpp"
#include "psd/partition_search.hpp"

#include <functional>
#include <vector>

namespace psd {

struct WOptions {
    bool exact = false;            // request exhaustive search for n > 2
    std::size_t max_exact_cells = finite::kMaxBruteForceAtoms;
};

CellTable cell_table(grid::Representation rep, const Decomposition<grid::GridWavefunction>& D);

// Two-element value from the Hahn set; works without an independence check.
WReport w_two(grid::Representation rep, const grid::GridWavefunction& a, const grid::GridWavefunction& b);
WReport w_two_spatial(const grid::GridWavefunction& a, const grid::GridWavefunction& b);
WReport w_two_momentum(const grid::GridWavefunction& a, const grid::GridWavefunction& b);

struct LogW {
    double log_value = 0.0;
    double value = 0.0;  // exp(log_value), may underflow to 0
};

// Two-element w from log-densities sampled with uniform weight, entirely in the
// log domain so values far below the double range stay meaningful.
LogW w_two_from_log_densities(const std::vector<double>& log_d1, const std::vector<double>& log_d2, double log_weight);

WReport w_general(const finite::AtomicSpectralMeasure& G, const Decomposition<finite::StateVector>& D,
                  const WOptions& opts = {});
WReport w_general(grid::Representation rep, const Decomposition<grid::GridWavefunction>& D, const WOptions& opts = {});

template <HilbertState S>
using WEvaluator = std::function<WReport(const Decomposition<S>&)>;

inline WEvaluator<finite::StateVector> evaluator(const finite::AtomicSpectralMeasure& G, WOptions opts = {}) {
    return [&G, opts](const Decomposition<finite::StateVector>& D) { return w_general(G, D, opts); };
}

inline WEvaluator<grid::GridWavefunction> evaluator(grid::Representation rep, WOptions opts = {}) {
    return [rep, opts](const Decomposition<grid::GridWavefunction>& D) { return w_general(rep, D, opts); };
}

namespace detail {
void check_time_grid(const std::vector<double>& times);
}

// w of U(t)D at each sampled time; propagation is by successive increments.
template <HilbertState S>
std::vector<WReport> w_over_time(const WEvaluator<S>& eval, const Decomposition<S>& D, const Propagator<S>& U,
                                 const std::vector<double>& times) {
    detail::check_time_grid(times);
    std::vector<WReport> out;
    out.reserve(times.size());
    Decomposition<S> cur = D;
    double t_prev = 0.0;
    for (double t : times) {
        if (t != t_prev) cur = cur.propagated(U, t - t_prev);
        t_prev = t;
        WReport r = eval(cur);
        r.achieving_time = t;
        out.push_back(std::move(r));
    }
    return out;
}

// Sampled sup over t of w(U(t)D). A sampled sup is a lower bound on the true sup.
template <HilbertState S>
WReport w_plus(const WEvaluator<S>& eval, const Decomposition<S>& D, const Propagator<S>& U,
               const std::vector<double>& times) {
    auto series = w_over_time(eval, D, U, times);
    std::size_t best = 0;
    bool all_certified = true;
    for (std::size_t i = 0; i < series.size(); ++i) {
        all_certified = all_certified && series[i].certified;
        if (series[i].value > series[best].value) best = i;
    }
    WReport r = std::move(series[best]);
    r.certified = all_certified;
    r.notes.push_back("sup sampled on " + std::to_string(times.size()) +
                      " times; the sampled value is a lower bound on the true sup");
    return r;
}

}  // namespace psd

#include "psd/proximity.hpp"

#include "psd/error.hpp"
#include "psd/special.hpp"

#include <cmath>
#include <limits>

namespace psd {

namespace {

Eigen::VectorXcd weighted_samples(grid::Representation rep, const grid::GridWavefunction& psi) {
    if (rep == grid::Representation::position) return psi.coefficients() * std::sqrt(psi.grid().dx());
    return psi.momentum_samples() * std::sqrt(psi.grid().dp(psi.hbar()));
}

}  // namespace

CellTable cell_table(grid::Representation rep, const Decomposition<grid::GridWavefunction>& D) {
    const auto n = static_cast<Eigen::Index>(D.size());
    Eigen::MatrixXcd amp(static_cast<Eigen::Index>(D[0].grid().n_cells()), n);
    for (Eigen::Index i = 0; i < n; ++i) amp.col(i) = weighted_samples(rep, D[static_cast<std::size_t>(i)]);
    return CellTable::from_amplitudes(amp);
}

WReport w_two(grid::Representation rep, const grid::GridWavefunction& a, const grid::GridWavefunction& b) {
    if (!a.compatible(b)) throw InvalidInput("w_two: states live on different grids");
    if (!(norm2(a) > 0.0) || !(norm2(b) > 0.0)) throw InvalidInput("w_two: input state has zero norm");
    Eigen::MatrixXcd amp(static_cast<Eigen::Index>(a.grid().n_cells()), 2);
    amp.col(0) = weighted_samples(rep, a);
    amp.col(1) = weighted_samples(rep, b);
    return hahn_two(CellTable::from_amplitudes(amp));
}

WReport w_two_spatial(const grid::GridWavefunction& a, const grid::GridWavefunction& b) {
    return w_two(grid::Representation::position, a, b);
}

WReport w_two_momentum(const grid::GridWavefunction& a, const grid::GridWavefunction& b) {
    return w_two(grid::Representation::momentum, a, b);
}

LogW w_two_from_log_densities(const std::vector<double>& log_d1, const std::vector<double>& log_d2, double log_weight) {
    if (log_d1.size() != log_d2.size() || log_d1.empty()) throw InvalidInput("log densities must be equal-length and nonempty");
    std::vector<double> mins(log_d1.size());
    for (std::size_t k = 0; k < mins.size(); ++k) mins[k] = std::min(log_d1[k], log_d2[k]);
    const double log_overlap = log_sum_exp(mins.begin(), mins.end()) + log_weight;
    const double log_n1 = log_sum_exp(log_d1.begin(), log_d1.end()) + log_weight;
    const double log_n2 = log_sum_exp(log_d2.begin(), log_d2.end()) + log_weight;
    if (!std::isfinite(log_n1) || !std::isfinite(log_n2)) throw InvalidInput("w_two_from_log_densities: zero-norm input");
    LogW r;
    r.log_value = 0.5 * (log_overlap - std::min(log_n1, log_n2));
    r.value = std::exp(r.log_value);
    return r;
}

WReport w_general(const finite::AtomicSpectralMeasure& G, const Decomposition<finite::StateVector>& D,
                  const WOptions& opts) {
    if (opts.exact && D.size() > 2 && G.size() > opts.max_exact_cells)
        throw ResourceLimit("exact w requested for " + std::to_string(G.size()) + " atoms; limit is " +
                            std::to_string(opts.max_exact_cells));
    return minimize_partition(finite::cell_table(G, D), opts.exact, opts.max_exact_cells);
}

WReport w_general(grid::Representation rep, const Decomposition<grid::GridWavefunction>& D, const WOptions& opts) {
    if (opts.exact && D.size() > 2 && D[0].grid().n_cells() > opts.max_exact_cells)
        throw ResourceLimit("exact w requested for " + std::to_string(D[0].grid().n_cells()) + " grid cells; limit is " +
                            std::to_string(opts.max_exact_cells));
    return minimize_partition(cell_table(rep, D), opts.exact, opts.max_exact_cells);
}

namespace detail {

void check_time_grid(const std::vector<double>& times) {
    if (times.empty()) throw InvalidInput("time grid must be nonempty");
    if (times.front() != 0.0) throw InvalidInput("time grid must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] >= times[i - 1]) || !std::isfinite(times[i])) throw InvalidInput("time grid must be nondecreasing and finite");
}

}  // namespace detail

}  // namespace psd

#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace psd {

enum class WMethod { exact_two, heuristic, brute_force, trivial_single };

const char* to_string(WMethod m);

struct WReport {
    double value = 0.0;
    std::vector<int> witness;  // label per cell (atom or grid cell)
    WMethod method = WMethod::trivial_single;
    bool certified = true;
    std::optional<double> achieving_time;
    std::vector<std::string> notes;
};

// {value, method, certified, witness: [[label, run_length], ...], achieving_time?, notes?}
nlohmann::json to_json(const WReport& r);

// Per-cell masses of every subset sum of the decomposition:
// mass(k, I) = ||P_k Psi_I||^2 where P_k is the projector of cell k.
class CellTable {
public:
    static constexpr std::size_t kMaxElements = 16;

    // fibers[k] has one column per element: coordinates of P_k Psi_i in an
    // orthonormal basis of range(P_k), with quadrature weights folded in.
    CellTable(const std::vector<Eigen::MatrixXcd>& fibers, std::size_t n_elements);
    // Rank-one cells: amp(k, i) is the weighted amplitude of element i in cell k.
    static CellTable from_amplitudes(const Eigen::MatrixXcd& amp);

    std::size_t n() const { return n_; }
    std::size_t cells() const { return cells_; }
    std::size_t subsets() const { return std::size_t{1} << n_; }
    unsigned full_mask() const { return static_cast<unsigned>(subsets() - 1); }

    double mass(std::size_t k, unsigned I) const { return mass_[k * subsets() + I]; }
    double total(unsigned I) const { return total_[I]; }
    // Cells where some element has nonzero mass.
    const std::vector<std::size_t>& active_cells() const { return active_; }

private:
    CellTable() = default;
    void finish();

    std::size_t n_ = 0;
    std::size_t cells_ = 0;
    std::vector<double> mass_;
    std::vector<double> total_;
    std::vector<std::size_t> active_;
};

// Squared objective of a label assignment: max over nonempty proper I of
// ||Psi_I - G(Delta_I) Psi||^2 / ||Psi_I||^2. Throws if some ||Psi_I|| = 0.
double assignment_objective2(const CellTable& t, const std::vector<int>& labels);

// Exact two-element value via the Hahn set {k : mass_1 >= mass_2}.
WReport hahn_two(const CellTable& t);

// Argmax-density assignment (ties to the lowest index) plus one local-improvement sweep.
WReport heuristic_partition(const CellTable& t);

// Exact inf over all n^cells assignments by branch and bound.
WReport exhaustive_partition(const CellTable& t, std::size_t max_cells = 14);

// Dispatch on n: 1 -> 0, 2 -> Hahn, otherwise exact or heuristic.
WReport minimize_partition(const CellTable& t, bool exact, std::size_t max_cells = 14);

}  // namespace psd

#pragma once

#include "psd/decomposition.hpp"
#include "psd/interval_set.hpp"
#include "psd/partition_search.hpp"
#include "psd/scalar_measure.hpp"
#include "psd/state.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace psd::finite {

class StateVector {
public:
    explicit StateVector(Eigen::VectorXcd amplitudes);

    std::size_t dim() const { return static_cast<std::size_t>(amp_.size()); }
    const Eigen::VectorXcd& coefficients() const { return amp_; }
    double cell_weight() const { return 1.0; }
    StateVector with_coefficients(Eigen::VectorXcd v) const { return StateVector(std::move(v)); }
    bool compatible(const StateVector& o) const { return o.dim() == dim(); }

private:
    Eigen::VectorXcd amp_;
};

// Measurable region of the outcome space R^d, built from explicit points,
// boxes, half-spaces and 1D interval sets under union/intersection/complement.
class Region {
public:
    static Region all();
    static Region empty();
    static Region points(std::vector<Eigen::VectorXd> pts);
    static Region box(Eigen::VectorXd lo, Eigen::VectorXd hi);  // closed
    static Region half_space(Eigen::VectorXd normal, double offset);  // normal . x <= offset
    static Region intervals(IntervalSet set);  // tests coordinate 0
    static Region unite(Region a, Region b);
    static Region intersect(Region a, Region b);
    static Region complement(Region a);

    bool contains(const Eigen::VectorXd& x) const;

    struct Node;

private:
    explicit Region(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

struct Atom {
    Eigen::VectorXd point;
    Eigen::MatrixXcd projector;
};

class AtomicSpectralMeasure {
public:
    explicit AtomicSpectralMeasure(std::vector<Atom> atoms, double tol = 1e-10);

    // Coordinate projectors e_k e_k^T placed at points (k) on the real line,
    // or at the given points.
    static AtomicSpectralMeasure coordinate(std::size_t dim);
    static AtomicSpectralMeasure coordinate(std::size_t dim, const std::vector<Eigen::VectorXd>& points);
    // Atom j projects onto the span of the columns of U listed in groups[j].
    static AtomicSpectralMeasure from_basis(const Eigen::MatrixXcd& U, const std::vector<std::vector<int>>& groups,
                                            const std::vector<Eigen::VectorXd>& points);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return atoms_.size(); }
    const std::vector<Atom>& atoms() const { return atoms_; }
    // Orthonormal basis of range(P_k), dim x rank.
    const Eigen::MatrixXcd& range_basis(std::size_t k) const { return bases_.at(k); }
    Eigen::MatrixXcd projector_of(const Region& r) const;
    std::vector<char> atoms_in(const Region& r) const;

private:
    std::size_t dim_ = 0;
    std::vector<Atom> atoms_;
    std::vector<Eigen::MatrixXcd> bases_;
};

StateVector apply_measure(const AtomicSpectralMeasure& G, const Region& region, const StateVector& psi);
DiscreteScalarMeasure measure_scalar(const AtomicSpectralMeasure& G, const StateVector& psi);
bool polarization_equal(const AtomicSpectralMeasure& G, const AtomicSpectralMeasure& Gp, std::size_t trials,
                        std::uint64_t seed = 7, double tol = 1e-8);

inline constexpr std::size_t kMaxBruteForceAtoms = 14;

// Exact w_G by exhaustive assignment of atoms to element labels.
WReport brute_force_w(const AtomicSpectralMeasure& G, const Decomposition<StateVector>& D);

// Cell table of D over the atoms of G.
CellTable cell_table(const AtomicSpectralMeasure& G, const Decomposition<StateVector>& D);

// exp(-i H t) for Hermitian H (hbar = 1).
class HamiltonianPropagator {
public:
    explicit HamiltonianPropagator(const Eigen::MatrixXcd& H);
    StateVector operator()(const StateVector& psi, double t) const;
    const Eigen::MatrixXcd& hamiltonian() const { return H_; }

private:
    Eigen::MatrixXcd H_;
    Eigen::MatrixXcd V_;
    Eigen::VectorXd lambda_;
};

}  // namespace psd::finite

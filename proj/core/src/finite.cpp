#include "psd/finite.hpp"

#include "psd/error.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <variant>

namespace psd::finite {

StateVector::StateVector(Eigen::VectorXcd amplitudes) : amp_(std::move(amplitudes)) {
    if (amp_.size() < 1) throw InvalidInput("state vector needs dim >= 1");
    if (!amp_.allFinite()) throw InvalidInput("state vector amplitudes must be finite");
}

struct Region::Node {
    enum class Kind { all, empty, points, box, half_space, intervals, unite, intersect, complement };
    Kind kind = Kind::all;
    std::vector<Eigen::VectorXd> pts;
    Eigen::VectorXd a, b;
    double offset = 0.0;
    IntervalSet set;
    std::shared_ptr<const Node> left, right;
};

Region Region::all() { return Region(std::make_shared<Node>()); }

Region Region::empty() {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::empty;
    return Region(n);
}

Region Region::points(std::vector<Eigen::VectorXd> pts) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::points;
    n->pts = std::move(pts);
    return Region(n);
}

Region Region::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() != hi.size()) throw InvalidInput("box corners differ in dimension");
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::box;
    n->a = std::move(lo);
    n->b = std::move(hi);
    return Region(n);
}

Region Region::half_space(Eigen::VectorXd normal, double offset) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::half_space;
    n->a = std::move(normal);
    n->offset = offset;
    return Region(n);
}

Region Region::intervals(IntervalSet set) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::intervals;
    n->set = std::move(set);
    return Region(n);
}

Region Region::unite(Region a, Region b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::unite;
    n->left = a.node_;
    n->right = b.node_;
    return Region(n);
}

Region Region::intersect(Region a, Region b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::intersect;
    n->left = a.node_;
    n->right = b.node_;
    return Region(n);
}

Region Region::complement(Region a) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::complement;
    n->left = a.node_;
    return Region(n);
}

namespace {

bool node_contains(const Region::Node& n, const Eigen::VectorXd& x);

}  // namespace

bool Region::contains(const Eigen::VectorXd& x) const { return node_contains(*node_, x); }

namespace {

bool node_contains(const Region::Node& n, const Eigen::VectorXd& x) {
    using K = Region::Node::Kind;
    switch (n.kind) {
        case K::all: return true;
        case K::empty: return false;
        case K::points:
            return std::any_of(n.pts.begin(), n.pts.end(),
                               [&](const Eigen::VectorXd& p) { return p.size() == x.size() && p == x; });
        case K::box:
            if (n.a.size() != x.size()) throw InvalidInput("region/point dimension mismatch");
            return ((x.array() >= n.a.array()) && (x.array() <= n.b.array())).all();
        case K::half_space:
            if (n.a.size() != x.size()) throw InvalidInput("region/point dimension mismatch");
            return n.a.dot(x) <= n.offset;
        case K::intervals:
            if (x.size() < 1) throw InvalidInput("interval region needs a coordinate");
            return n.set.contains(x[0]);
        case K::unite: return node_contains(*n.left, x) || node_contains(*n.right, x);
        case K::intersect: return node_contains(*n.left, x) && node_contains(*n.right, x);
        case K::complement: return !node_contains(*n.left, x);
    }
    return false;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

AtomicSpectralMeasure::AtomicSpectralMeasure(std::vector<Atom> atoms, double tol) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw InvalidInput("spectral measure needs at least one atom");
    dim_ = static_cast<std::size_t>(atoms_.front().projector.rows());
    if (dim_ < 1) throw InvalidInput("spectral measure needs dim >= 1");
    const auto d = static_cast<Eigen::Index>(dim_);
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const auto& P = atoms_[i].projector;
        if (P.rows() != d || P.cols() != d) throw InvalidInput("atom projector has wrong shape");
        if (max_abs(P * P - P) > tol) throw InvalidInput("atom projector is not idempotent");
        if (max_abs(P - P.adjoint()) > tol) throw InvalidInput("atom projector is not self-adjoint");
        for (std::size_t j = 0; j < i; ++j) {
            if (max_abs(P * atoms_[j].projector) > tol) throw InvalidInput("atom projectors are not orthogonal");
            if (atoms_[j].point.size() == atoms_[i].point.size() && atoms_[j].point == atoms_[i].point)
                throw InvalidInput("atom points must be distinct");
        }
        sum += P;
    }
    if (max_abs(sum - Eigen::MatrixXcd::Identity(d, d)) > tol)
        throw InvalidInput("atom projectors do not sum to the identity");
    for (const auto& a : atoms_) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.projector);
        std::vector<Eigen::Index> cols;
        for (Eigen::Index c = 0; c < d; ++c)
            if (es.eigenvalues()[c] > 0.5) cols.push_back(c);
        Eigen::MatrixXcd B(d, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) B.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(cols[c]);
        bases_.push_back(std::move(B));
    }
}

AtomicSpectralMeasure AtomicSpectralMeasure::coordinate(std::size_t dim) {
    std::vector<Eigen::VectorXd> pts;
    for (std::size_t k = 0; k < dim; ++k) pts.push_back(Eigen::VectorXd::Constant(1, static_cast<double>(k)));
    return coordinate(dim, pts);
}

AtomicSpectralMeasure AtomicSpectralMeasure::coordinate(std::size_t dim, const std::vector<Eigen::VectorXd>& points) {
    if (points.size() != dim) throw InvalidInput("coordinate measure needs one point per basis vector");
    std::vector<Atom> atoms;
    const auto d = static_cast<Eigen::Index>(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(d, d);
        P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
        atoms.push_back({points[k], std::move(P)});
    }
    return AtomicSpectralMeasure(std::move(atoms));
}

AtomicSpectralMeasure AtomicSpectralMeasure::from_basis(const Eigen::MatrixXcd& U,
                                                        const std::vector<std::vector<int>>& groups,
                                                        const std::vector<Eigen::VectorXd>& points) {
    if (groups.size() != points.size()) throw InvalidInput("from_basis needs one point per group");
    std::vector<Atom> atoms;
    for (std::size_t j = 0; j < groups.size(); ++j) {
        Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(U.rows(), U.rows());
        for (int c : groups[j]) {
            if (c < 0 || c >= U.cols()) throw InvalidInput("from_basis column index out of range");
            P += U.col(c) * U.col(c).adjoint();
        }
        atoms.push_back({points[j], std::move(P)});
    }
    return AtomicSpectralMeasure(std::move(atoms), 1e-9);
}

std::vector<char> AtomicSpectralMeasure::atoms_in(const Region& r) const {
    std::vector<char> in(atoms_.size());
    for (std::size_t k = 0; k < atoms_.size(); ++k) in[k] = r.contains(atoms_[k].point) ? 1 : 0;
    return in;
}

Eigen::MatrixXcd AtomicSpectralMeasure::projector_of(const Region& r) const {
    const auto d = static_cast<Eigen::Index>(dim_);
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(d, d);
    const auto in = atoms_in(r);
    for (std::size_t k = 0; k < atoms_.size(); ++k)
        if (in[k]) P += atoms_[k].projector;
    return P;
}

StateVector apply_measure(const AtomicSpectralMeasure& G, const Region& region, const StateVector& psi) {
    if (psi.dim() != G.dim()) throw InvalidInput("apply_measure: dimension mismatch");
    return StateVector(G.projector_of(region) * psi.coefficients());
}

DiscreteScalarMeasure measure_scalar(const AtomicSpectralMeasure& G, const StateVector& psi) {
    if (psi.dim() != G.dim()) throw InvalidInput("measure_scalar: dimension mismatch");
    std::vector<Eigen::VectorXd> pts;
    std::vector<double> w;
    for (std::size_t k = 0; k < G.size(); ++k) {
        pts.push_back(G.atoms()[k].point);
        w.push_back((G.range_basis(k).adjoint() * psi.coefficients()).squaredNorm());
    }
    return DiscreteScalarMeasure(std::move(pts), std::move(w));
}

namespace {

using PointKey = std::vector<double>;

std::map<PointKey, double> by_point(const DiscreteScalarMeasure& m) {
    std::map<PointKey, double> out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& p = m.points()[i];
        out[PointKey(p.data(), p.data() + p.size())] += m.weights()[i];
    }
    return out;
}

bool same_scalar(const AtomicSpectralMeasure& G, const AtomicSpectralMeasure& Gp, const StateVector& psi, double tol) {
    auto a = by_point(measure_scalar(G, psi));
    auto b = by_point(measure_scalar(Gp, psi));
    const double scale = std::max(1.0, psi.coefficients().squaredNorm());
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        const double w = it == b.end() ? 0.0 : it->second;
        if (std::abs(v - w) > tol * scale) return false;
    }
    for (const auto& [k, v] : b)
        if (!a.count(k) && std::abs(v) > tol * scale) return false;
    return true;
}

}  // namespace

bool polarization_equal(const AtomicSpectralMeasure& G, const AtomicSpectralMeasure& Gp, std::size_t trials,
                        std::uint64_t seed, double tol) {
    if (G.dim() != Gp.dim()) throw InvalidInput("polarization_equal: dimension mismatch");
    const auto d = static_cast<Eigen::Index>(G.dim());
    // e_i, e_i + e_j, e_i + i e_j determine every matrix entry by polarization.
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
        v[i] = 1.0;
        if (!same_scalar(G, Gp, StateVector(v), tol)) return false;
        for (Eigen::Index j = i + 1; j < d; ++j) {
            Eigen::VectorXcd a = v, b = v;
            a[j] = 1.0;
            b[j] = cplx(0.0, 1.0);
            if (!same_scalar(G, Gp, StateVector(a), tol) || !same_scalar(G, Gp, StateVector(b), tol)) return false;
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (std::size_t t = 0; t < trials; ++t) {
        Eigen::VectorXcd v(d);
        for (Eigen::Index i = 0; i < d; ++i) v[i] = cplx(nd(rng), nd(rng));
        if (!same_scalar(G, Gp, StateVector(v), tol)) return false;
    }
    return true;
}

CellTable cell_table(const AtomicSpectralMeasure& G, const Decomposition<StateVector>& D) {
    if (D[0].dim() != G.dim()) throw InvalidInput("cell_table: dimension mismatch");
    const Eigen::MatrixXcd cols = D.columns();
    std::vector<Eigen::MatrixXcd> fibers;
    fibers.reserve(G.size());
    for (std::size_t k = 0; k < G.size(); ++k) fibers.push_back(G.range_basis(k).adjoint() * cols);
    return CellTable(fibers, D.size());
}

WReport brute_force_w(const AtomicSpectralMeasure& G, const Decomposition<StateVector>& D) {
    if (G.size() > kMaxBruteForceAtoms)
        throw ResourceLimit("brute_force_w enumerates at most " + std::to_string(kMaxBruteForceAtoms) +
                            " atoms, got " + std::to_string(G.size()));
    if (D.size() < 2) throw InvalidInput("brute_force_w needs a decomposition with at least two elements");
    return exhaustive_partition(cell_table(G, D), kMaxBruteForceAtoms);
}

HamiltonianPropagator::HamiltonianPropagator(const Eigen::MatrixXcd& H) : H_(H) {
    if (H.rows() != H.cols()) throw InvalidInput("Hamiltonian must be square");
    if (max_abs(H - H.adjoint()) > 1e-10 * std::max(1.0, max_abs(H))) throw InvalidInput("Hamiltonian must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    V_ = es.eigenvectors();
    lambda_ = es.eigenvalues();
}

StateVector HamiltonianPropagator::operator()(const StateVector& psi, double t) const {
    if (static_cast<Eigen::Index>(psi.dim()) != H_.rows()) throw InvalidInput("propagator dimension mismatch");
    Eigen::VectorXcd c = V_.adjoint() * psi.coefficients();
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::polar(1.0, -lambda_[i] * t);
    return StateVector(V_ * c);
}

}  // namespace psd::finite

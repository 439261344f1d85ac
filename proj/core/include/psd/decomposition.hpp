#pragma once

#include "psd/error.hpp"
#include "psd/state.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace psd {

namespace detail {
// Ratio of smallest to largest singular value of the columns; 0 when rank-deficient.
double column_conditioning(const Eigen::MatrixXcd& columns);
// Least-squares coefficients of target in the column basis.
Eigen::VectorXcd solve_in_span(const Eigen::MatrixXcd& columns, const Eigen::VectorXcd& target);
}  // namespace detail

inline constexpr double kRankTolerance = 1e-10;

template <HilbertState S>
class Decomposition {
public:
    explicit Decomposition(std::vector<S> elements, double rank_tol = kRankTolerance)
        : elements_(std::move(elements)) {
        if (elements_.empty()) throw InvalidInput("decomposition needs at least one element");
        for (const auto& e : elements_)
            if (!elements_.front().compatible(e)) throw InvalidInput("decomposition elements live in different spaces");
        if (detail::column_conditioning(columns()) <= rank_tol)
            throw InvalidInput("decomposition elements are linearly dependent (relative singular value <= " +
                               std::to_string(rank_tol) + ")");
        compute_sum();
    }

    std::size_t size() const { return elements_.size(); }
    const std::vector<S>& elements() const { return elements_; }
    const S& operator[](std::size_t i) const { return elements_.at(i); }
    const S& sum() const { return *sum_; }

    // Sum of the elements whose index bit is set in mask.
    S subset_sum(unsigned long long mask) const {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(elements_.front().coefficients().size());
        for (std::size_t i = 0; i < elements_.size(); ++i)
            if (mask >> i & 1ULL) v += elements_[i].coefficients();
        return elements_.front().with_coefficients(std::move(v));
    }

    // Columns scaled by sqrt(cell_weight) so that the Euclidean inner product is the state one.
    Eigen::MatrixXcd columns() const {
        const auto& f = elements_.front();
        Eigen::MatrixXcd m(f.coefficients().size(), static_cast<Eigen::Index>(elements_.size()));
        const double w = std::sqrt(f.cell_weight());
        for (std::size_t i = 0; i < elements_.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = elements_[i].coefficients() * w;
        return m;
    }

    // U(t) applied elementwise; unitarity preserves independence, so no re-check.
    Decomposition propagated(const Propagator<S>& U, double t) const {
        std::vector<S> out;
        out.reserve(elements_.size());
        for (const auto& e : elements_) out.push_back(U(e, t));
        return Decomposition(std::move(out), Unchecked{});
    }

private:
    struct Unchecked {};
    Decomposition(std::vector<S> elements, Unchecked) : elements_(std::move(elements)) { compute_sum(); }

    void compute_sum() {
        Eigen::VectorXcd v = elements_.front().coefficients();
        for (std::size_t i = 1; i < elements_.size(); ++i) v += elements_[i].coefficients();
        sum_.emplace(elements_.front().with_coefficients(std::move(v)));
    }

    std::vector<S> elements_;
    std::optional<S> sum_;
};

// h: finer index -> coarser index.
struct CoarseningMap {
    std::vector<std::size_t> target;
    std::size_t coarse_size = 0;

    bool operator==(const CoarseningMap&) const = default;
};

struct BornResult {
    std::vector<double> probabilities;
    bool orthogonal = true;
    double max_overlap = 0.0;  // max normalized |<Psi_i|Psi_j>|
};

template <HilbertState S>
double max_normalized_overlap(const Decomposition<S>& D) {
    double worst = 0.0;
    for (std::size_t i = 0; i < D.size(); ++i)
        for (std::size_t j = i + 1; j < D.size(); ++j) {
            const double d = norm(D[i]) * norm(D[j]);
            if (d > 0.0) worst = std::max(worst, std::abs(inner(D[i], D[j])) / d);
        }
    return worst;
}

template <HilbertState S>
BornResult born_measure(const Decomposition<S>& D, double ortho_tol = 1e-6) {
    const double total = norm2(D.sum());
    if (!(total > 0.0)) throw InvalidInput("born_measure: parent vector has zero norm");
    BornResult r;
    for (const auto& e : D.elements()) r.probabilities.push_back(norm2(e) / total);
    r.max_overlap = max_normalized_overlap(D);
    r.orthogonal = r.max_overlap <= ortho_tol;
    return r;
}

template <HilbertState S>
bool verify_coarsening(const Decomposition<S>& fine, const Decomposition<S>& coarse, const CoarseningMap& h,
                       double rel_tol = 1e-8) {
    if (h.target.size() != fine.size() || h.coarse_size != coarse.size()) return false;
    std::vector<unsigned long long> pre(coarse.size(), 0);
    std::vector<Eigen::VectorXcd> acc(coarse.size(),
                                      Eigen::VectorXcd::Zero(coarse[0].coefficients().size()));
    for (std::size_t i = 0; i < fine.size(); ++i) {
        if (h.target[i] >= coarse.size()) return false;
        pre[h.target[i]] |= 1ULL << (i % 64);
        acc[h.target[i]] += fine[i].coefficients();
    }
    const double w = std::sqrt(coarse[0].cell_weight());
    for (std::size_t j = 0; j < coarse.size(); ++j) {
        if (pre[j] == 0) return false;  // not surjective
        const double scale = std::max(coarse[j].coefficients().norm(), acc[j].norm()) * w;
        if ((acc[j] - coarse[j].coefficients()).norm() * w > rel_tol * scale) return false;
    }
    return true;
}

template <HilbertState S>
Decomposition<S> coarsen(const Decomposition<S>& fine, const CoarseningMap& h) {
    if (h.target.size() != fine.size()) throw InvalidInput("coarsening map size mismatch");
    std::vector<Eigen::VectorXcd> acc(h.coarse_size, Eigen::VectorXcd::Zero(fine[0].coefficients().size()));
    std::vector<bool> hit(h.coarse_size, false);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        if (h.target[i] >= h.coarse_size) throw InvalidInput("coarsening map target out of range");
        acc[h.target[i]] += fine[i].coefficients();
        hit[h.target[i]] = true;
    }
    std::vector<S> out;
    for (std::size_t j = 0; j < h.coarse_size; ++j) {
        if (!hit[j]) throw InvalidInput("coarsening map is not surjective");
        out.push_back(fine[0].with_coefficients(std::move(acc[j])));
    }
    return Decomposition<S>(std::move(out));
}

inline constexpr std::size_t kMaxFinerEnumeration = 12;

// Returns h when every element of D' is a subset sum of D (D finer than D').
// Candidate subsets come from a least-squares solve in the span of D, which is
// exact for independent D; for badly conditioned D the 2^n subset enumeration
// runs instead, bounded by kMaxFinerEnumeration.
template <HilbertState S>
std::optional<CoarseningMap> is_finer(const Decomposition<S>& D, const Decomposition<S>& Dp, double rel_tol = 1e-8) {
    if (!D[0].compatible(Dp[0])) throw InvalidInput("is_finer: decompositions live in different spaces");
    const std::size_t n = D.size();
    if (Dp.size() > n) return std::nullopt;
    const Eigen::MatrixXcd A = D.columns();
    const double w = std::sqrt(D[0].cell_weight());

    CoarseningMap h{std::vector<std::size_t>(n, Dp.size()), Dp.size()};
    // Least-squares coefficients are only trustworthy when D is well conditioned.
    if (detail::column_conditioning(A) >= 1e-6) {
        for (std::size_t j = 0; j < Dp.size(); ++j) {
            const Eigen::VectorXcd c = Dp[j].coefficients() * w;
            const Eigen::VectorXcd alpha = detail::solve_in_span(A, c);
            if ((A * alpha - c).norm() > rel_tol * c.norm()) return std::nullopt;  // not in span of D
            for (std::size_t i = 0; i < n; ++i) {
                const cplx a = alpha[static_cast<Eigen::Index>(i)];
                if (std::abs(a - cplx(1.0)) < 1e-4) {
                    if (h.target[i] != Dp.size()) return std::nullopt;  // element used twice
                    h.target[i] = j;
                } else if (std::abs(a) >= 1e-4) {
                    return std::nullopt;
                }
            }
        }
        for (auto t : h.target)
            if (t == Dp.size()) return std::nullopt;
        if (verify_coarsening(D, Dp, h, rel_tol)) return h;
        return std::nullopt;
    }

    if (n > kMaxFinerEnumeration)
        throw ResourceLimit("is_finer: " + std::to_string(n) + " elements exceed the subset enumeration bound of " +
                            std::to_string(kMaxFinerEnumeration));
    h.target.assign(n, Dp.size());
    for (std::size_t j = 0; j < Dp.size(); ++j) {
        const Eigen::VectorXcd c = Dp[j].coefficients();
        const double scale = c.norm();
        bool found = false;
        for (unsigned long long mask = 1; mask < (1ULL << n) && !found; ++mask) {
            bool free = true;
            for (std::size_t i = 0; i < n; ++i)
                if ((mask >> i & 1ULL) && h.target[i] != Dp.size()) free = false;
            if (!free) continue;
            if ((D.subset_sum(mask).coefficients() - c).norm() <= rel_tol * scale) {
                for (std::size_t i = 0; i < n; ++i)
                    if (mask >> i & 1ULL) h.target[i] = j;
                found = true;
            }
        }
        if (!found) return std::nullopt;
    }
    for (auto t : h.target)
        if (t == Dp.size()) return std::nullopt;
    return h;
}

// Lineage-hinted form: verifies the given map instead of searching.
template <HilbertState S>
std::optional<CoarseningMap> is_finer(const Decomposition<S>& D, const Decomposition<S>& Dp, const CoarseningMap& hint,
                                      double rel_tol = 1e-8) {
    if (verify_coarsening(D, Dp, hint, rel_tol)) return hint;
    return std::nullopt;
}

}  // namespace psd

#pragma once

#include "psd/finite.hpp"
#include "psd/interval_set.hpp"
#include "psd/scalar_measure.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace psd::lab {

// Measure of a 1D region under a one-dimensional discrete measure.
double measure_of(const DiscreteScalarMeasure& m, const IntervalSet& region);
// Mass sitting exactly on the boundary points of the region.
double boundary_mass(const DiscreteScalarMeasure& m, const IntervalSet& region);

// Monotone family Delta_k = region.endpoint_shift(eta_k), eta_k = eta0 / 2^k.
// For closed regions these are the nested closed dilations {d(x, Delta) <= eta_k};
// open endpoints move inward instead, so the family converges to Delta in
// measure for every finite atomic measure.
struct RegionFamily {
    IntervalSet base;
    std::vector<double> radii;
    std::vector<IntervalSet> members;
};

RegionFamily dilation_family(const IntervalSet& base, double eta0, std::size_t levels);

enum class SurrogateRoute { unchanged, immediate, endpoint_shift };

const char* to_string(SurrogateRoute r);

struct Surrogate {
    IntervalSet region;
    SurrogateRoute route = SurrogateRoute::unchanged;
    int level = -1;                // family index, -1 when Delta itself is returned
    double radius = 0.0;
    double symmetric_difference_mass = 0.0;  // G_Psi(Delta' xor Delta) = ||G(Delta)Psi - G(Delta')Psi||^2
    double boundary_mass = 0.0;    // G_Psi(boundary of Delta'); 0 for a continuity set
};

struct SurrogateOptions {
    double eta0 = 1.0;
    std::size_t max_levels = 60;
};

// Region Delta' with zero boundary mass and G_Psi(Delta xor Delta') <= eps^2.
Surrogate continuity_surrogate(const DiscreteScalarMeasure& m, const IntervalSet& region, double eps,
                               const SurrogateOptions& opts = {});

struct Corollary1Certificate {
    std::size_t n = 0;
    double delta = 0.0;
    double epsilon = 0.0;
    double max_subset_residual = 0.0;
    std::vector<double> per_stage_residuals;  // ||G(Delta_i)Psi - G(Sigma_i)Psi||
    std::vector<double> per_stage_bounds;     // (2i-1) delta for i < n, (n-1)^2 delta for i = n
    bool exact_partition = false;
    bool subsets_enumerated = true;           // false when n > 12: random subsets are sampled instead
    std::size_t subset_checks = 0;
    double subset_coverage = 0.0;             // subset_checks / (2^n - 2), capped at 1
    bool holds() const;
};

nlohmann::json to_json(const Corollary1Certificate& c);

struct Corollary1Result {
    std::vector<IntervalSet> sigma;
    std::vector<Surrogate> surrogates;
    Corollary1Certificate certificate;
};

inline constexpr std::size_t kMaxCertificateSets = 12;
inline constexpr std::size_t kCertificateSamples = 4096;

// Base partition {Delta_1..Delta_n} of R into continuity sets Sigma_i with
// ||G(Delta_I)Psi - G(Sigma_I)Psi|| <= eps for every index set I.
Corollary1Result corollary1_partition(const DiscreteScalarMeasure& m, const std::vector<IntervalSet>& base, double eps,
                                      const SurrogateOptions& opts = {});

// Vector route: residuals are measured as norms of G(A)Psi - G(B)Psi directly.
Corollary1Result corollary1_partition(const finite::AtomicSpectralMeasure& G, const finite::StateVector& psi,
                                      const std::vector<IntervalSet>& base, double eps, const SurrogateOptions& opts = {});

// True iff the sets are pairwise disjoint and cover R.
bool is_exact_partition(const std::vector<IntervalSet>& sets);

struct WeakConvergenceReport {
    bool converges = false;
    std::vector<double> times;
    std::vector<double> sup_residuals;          // sup over regions of |G_t(Delta) - G(Delta)| per time
    std::vector<double> final_residuals;        // per region, at the last time
    std::vector<std::string> offending_regions; // regions whose final residual exceeds tol
    std::vector<std::string> warnings;          // test regions with limit mass on their boundary
};

using MeasureFamily = std::function<DiscreteScalarMeasure(double)>;

// Verdict: the residual at the last time is <= tol for every test region and
// the sup-residual sequence ends at its minimum (within tol).
WeakConvergenceReport weak_convergence_check(const MeasureFamily& family, const DiscreteScalarMeasure& limit,
                                             const std::vector<IntervalSet>& test_regions, const std::vector<double>& times,
                                             double tol);

}  // namespace psd::lab

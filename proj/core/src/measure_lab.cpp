#include "psd/measure_lab.hpp"

#include "psd/error.hpp"
#include "psd/format.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace psd::lab {

namespace {

void require_1d(const DiscreteScalarMeasure& m) {
    if (m.dim() != 1) throw InvalidInput("measure-lab regions are one-dimensional; measure has dim " + std::to_string(m.dim()));
}

}  // namespace

double measure_of(const DiscreteScalarMeasure& m, const IntervalSet& region) {
    require_1d(m);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (region.contains(m.points()[i][0])) s += m.weights()[i];
    return s;
}

double boundary_mass(const DiscreteScalarMeasure& m, const IntervalSet& region) {
    require_1d(m);
    const auto b = region.boundary_points();
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (std::find(b.begin(), b.end(), m.points()[i][0]) != b.end()) s += m.weights()[i];
    return s;
}

RegionFamily dilation_family(const IntervalSet& base, double eta0, std::size_t levels) {
    if (!(eta0 > 0.0)) throw InvalidInput("dilation_family needs eta0 > 0");
    RegionFamily f{base, {}, {}};
    double eta = eta0;
    for (std::size_t k = 0; k < levels; ++k, eta *= 0.5) {
        f.radii.push_back(eta);
        f.members.push_back(base.endpoint_shift(eta));
    }
    return f;
}

const char* to_string(SurrogateRoute r) {
    switch (r) {
        case SurrogateRoute::unchanged: return "unchanged";
        case SurrogateRoute::immediate: return "immediate";
        case SurrogateRoute::endpoint_shift: return "endpoint-shift";
    }
    return "unknown";
}

Surrogate continuity_surrogate(const DiscreteScalarMeasure& m, const IntervalSet& region, double eps,
                               const SurrogateOptions& opts) {
    if (!(eps > 0.0)) throw InvalidInput("continuity_surrogate needs eps > 0");
    require_1d(m);
    const double eps2 = eps * eps;
    Surrogate s;
    s.region = region;
    s.boundary_mass = boundary_mass(m, region);
    if (eps2 >= m.total()) {
        s.route = SurrogateRoute::immediate;
        return s;
    }
    if (s.boundary_mass == 0.0) {
        s.route = SurrogateRoute::unchanged;
        return s;
    }
    const auto fam = dilation_family(region, opts.eta0, opts.max_levels);
    for (std::size_t k = 0; k < fam.members.size(); ++k) {
        const auto& cand = fam.members[k];
        // Levels whose new boundary lands on an atom are skipped: they are not continuity sets.
        if (boundary_mass(m, cand) > 0.0) continue;
        const double diff = measure_of(m, cand.symmetric_difference(region));
        if (diff <= eps2) {
            s.region = cand;
            s.route = SurrogateRoute::endpoint_shift;
            s.level = static_cast<int>(k);
            s.radius = fam.radii[k];
            s.symmetric_difference_mass = diff;
            s.boundary_mass = 0.0;
            return s;
        }
    }
    throw NotFound("continuity_surrogate: no level among " + std::to_string(opts.max_levels) +
                   " dilation radii meets the eps^2 = " + format_double(eps2) + " bound for " + region.to_string());
}

bool Corollary1Certificate::holds() const {
    if (!exact_partition) return false;
    if (max_subset_residual > epsilon * (1.0 + 1e-12)) return false;
    for (std::size_t i = 0; i < per_stage_residuals.size(); ++i)
        if (per_stage_residuals[i] > per_stage_bounds[i] * (1.0 + 1e-12) + 1e-15) return false;
    return true;
}

nlohmann::json to_json(const Corollary1Certificate& c) {
    nlohmann::json j;
    j["n"] = c.n;
    j["delta"] = c.delta;
    j["epsilon"] = c.epsilon;
    j["max_subset_residual"] = c.max_subset_residual;
    j["per_stage_residuals"] = c.per_stage_residuals;
    j["per_stage_bounds"] = c.per_stage_bounds;
    j["exact_partition"] = c.exact_partition;
    j["subsets_enumerated"] = c.subsets_enumerated;
    j["subset_checks"] = c.subset_checks;
    j["subset_coverage"] = c.subset_coverage;
    j["holds"] = c.holds();
    return j;
}

bool is_exact_partition(const std::vector<IntervalSet>& sets) {
    IntervalSet u;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (!sets[i].intersect(sets[j]).empty()) return false;
        u = u.unite(sets[i]);
    }
    return u == IntervalSet::all();
}

namespace {

using ResidualFn = std::function<double(const IntervalSet&, const IntervalSet&)>;

Corollary1Result build(const DiscreteScalarMeasure& m, const std::vector<IntervalSet>& base, double eps,
                       const SurrogateOptions& opts, const ResidualFn& residual) {
    const std::size_t n = base.size();
    if (n < 1) throw InvalidInput("corollary1_partition needs at least one set");
    if (!(eps > 0.0)) throw InvalidInput("corollary1_partition needs eps > 0");
    if (!is_exact_partition(base)) throw InvalidInput("corollary1_partition: base sets do not partition the line");

    Corollary1Result r;
    auto& c = r.certificate;
    c.n = n;
    c.epsilon = eps;
    c.delta = n == 1 ? eps : eps / (2.0 * static_cast<double>((n - 1) * (n - 1)));

    IntervalSet used;  // union of Delta'_j for j < i
    for (std::size_t i = 0; i + 1 < n; ++i) {
        r.surrogates.push_back(continuity_surrogate(m, base[i], c.delta, opts));
        const IntervalSet& dp = r.surrogates.back().region;
        r.sigma.push_back(dp.minus(used));
        used = used.unite(dp);
    }
    r.sigma.push_back(used.complement());
    c.exact_partition = is_exact_partition(r.sigma);

    for (std::size_t i = 0; i < n; ++i) {
        c.per_stage_residuals.push_back(residual(base[i], r.sigma[i]));
        const double k = static_cast<double>(i + 1);
        c.per_stage_bounds.push_back(i + 1 < n ? (2.0 * k - 1.0) * c.delta
                                               : static_cast<double>((n - 1) * (n - 1)) * c.delta);
    }
    const auto check = [&](unsigned long long I) {
        IntervalSet dI, sI;
        for (std::size_t i = 0; i < n; ++i)
            if (I >> i & 1ULL) {
                dI = dI.unite(base[i]);
                sI = sI.unite(r.sigma[i]);
            }
        c.max_subset_residual = std::max(c.max_subset_residual, residual(dI, sI));
        ++c.subset_checks;
    };
    const double proper = std::ldexp(1.0, static_cast<int>(n)) - 2.0;
    if (n <= kMaxCertificateSets) {
        for (unsigned long long I = 1; I + 1 < (1ULL << n); ++I) check(I);
    } else {
        // Seeded so certificates are reproducible.
        c.subsets_enumerated = false;
        std::mt19937_64 eng(0x5eed);
        std::uniform_int_distribution<unsigned long long> pick(1, (n >= 64 ? ~0ULL : (1ULL << n) - 2));
        for (std::size_t s = 0; s < kCertificateSamples; ++s) check(pick(eng));
    }
    c.subset_coverage = n == 1 ? 1.0 : std::min(1.0, static_cast<double>(c.subset_checks) / proper);
    return r;
}

}  // namespace

Corollary1Result corollary1_partition(const DiscreteScalarMeasure& m, const std::vector<IntervalSet>& base, double eps,
                                      const SurrogateOptions& opts) {
    require_1d(m);
    // ||G(A)Psi - G(B)Psi||^2 = G_Psi(A xor B) for a projection-valued G.
    return build(m, base, eps, opts,
                 [&m](const IntervalSet& a, const IntervalSet& b) { return std::sqrt(measure_of(m, a.symmetric_difference(b))); });
}

Corollary1Result corollary1_partition(const finite::AtomicSpectralMeasure& G, const finite::StateVector& psi,
                                      const std::vector<IntervalSet>& base, double eps, const SurrogateOptions& opts) {
    const auto m = finite::measure_scalar(G, psi);
    require_1d(m);
    return build(m, base, eps, opts, [&G, &psi](const IntervalSet& a, const IntervalSet& b) {
        const Eigen::MatrixXcd P = G.projector_of(finite::Region::intervals(a)) - G.projector_of(finite::Region::intervals(b));
        return (P * psi.coefficients()).norm();
    });
}

WeakConvergenceReport weak_convergence_check(const MeasureFamily& family, const DiscreteScalarMeasure& limit,
                                             const std::vector<IntervalSet>& test_regions, const std::vector<double>& times,
                                             double tol) {
    if (times.empty() || test_regions.empty()) throw InvalidInput("weak_convergence_check needs times and test regions");
    WeakConvergenceReport rep;
    rep.times = times;
    std::vector<double> lim;
    for (const auto& r : test_regions) {
        lim.push_back(measure_of(limit, r));
        if (boundary_mass(limit, r) > 0.0) rep.warnings.push_back("limit measure charges the boundary of " + r.to_string());
    }
    for (double t : times) {
        const auto mt = family(t);
        double sup = 0.0;
        std::vector<double> res;
        for (std::size_t i = 0; i < test_regions.size(); ++i) {
            res.push_back(std::abs(measure_of(mt, test_regions[i]) - lim[i]));
            sup = std::max(sup, res.back());
        }
        rep.sup_residuals.push_back(sup);
        rep.final_residuals = std::move(res);
    }
    for (std::size_t i = 0; i < test_regions.size(); ++i)
        if (rep.final_residuals[i] > tol) rep.offending_regions.push_back(test_regions[i].to_string());
    const double best = *std::min_element(rep.sup_residuals.begin(), rep.sup_residuals.end());
    rep.converges = rep.offending_regions.empty() && rep.sup_residuals.back() <= best + tol;
    return rep;
}

}  // namespace psd::lab

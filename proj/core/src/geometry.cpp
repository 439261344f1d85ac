#include "psd/geometry.hpp"

#include "psd/error.hpp"
#include "psd/format.hpp"

#include <cmath>
#include <limits>

namespace psd::geometry {

ConfigMetric::ConfigMetric(std::vector<double> masses, std::size_t spatial_dim, double scale)
    : masses_(std::move(masses)), spatial_dim_(spatial_dim), scale_(scale) {
    if (masses_.empty()) throw InvalidInput("metric needs at least one particle");
    if (spatial_dim_ < 1) throw InvalidInput("metric spatial dimension must be >= 1");
    if (!(scale_ > 0.0)) throw InvalidInput("metric scale must be positive");
    for (double m : masses_) {
        if (!(m > 0.0) || !std::isfinite(m)) throw InvalidInput("particle masses must be positive");
        total_ += m;
    }
}

double ConfigMetric::distance2(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    if (static_cast<std::size_t>(x.size()) != dim() || static_cast<std::size_t>(y.size()) != dim())
        throw InvalidInput("configuration point has wrong dimension");
    double s = 0.0;
    const auto sd = static_cast<Eigen::Index>(spatial_dim_);
    for (std::size_t i = 0; i < masses_.size(); ++i) {
        const auto off = static_cast<Eigen::Index>(i) * sd;
        s += masses_[i] * (x.segment(off, sd) - y.segment(off, sd)).squaredNorm();
    }
    return scale_ * scale_ * s / total_;
}

double ConfigMetric::distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return std::sqrt(distance2(x, y));
}

ConfigMetric ConfigMetric::scaled(double c) const { return ConfigMetric(masses_, spatial_dim_, scale_ * c); }

namespace {

double checked_total(const DiscreteScalarMeasure& m) {
    const double t = m.total();
    if (!(t >= kMinNorm2)) throw InvalidInput("state norm^2 below 1e-20; centroid and spread are undefined");
    return t;
}

}  // namespace

Eigen::VectorXd centroid(const DiscreteScalarMeasure& m) {
    const double total = checked_total(m);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.dim()));
    for (std::size_t i = 0; i < m.size(); ++i) c += m.weights()[i] * m.points()[i];
    return c / total;
}

double spread(const DiscreteScalarMeasure& m, const ConfigMetric& metric) {
    const double total = checked_total(m);
    const Eigen::VectorXd c = centroid(m);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m.weights()[i] * metric.distance2(m.points()[i], c);
    return std::sqrt(s / total);
}

DiscreteScalarMeasure position_measure(const grid::GridWavefunction& psi) {
    const auto& g = psi.grid();
    std::vector<double> x(g.n_cells()), w(g.n_cells());
    const auto& c = psi.coefficients();
    for (std::size_t k = 0; k < g.n_cells(); ++k) {
        x[k] = g.x(k);
        w[k] = std::norm(c[static_cast<Eigen::Index>(k)]) * g.dx();
    }
    return DiscreteScalarMeasure(x, std::move(w));
}

// Direct sums avoid building the point list on the hot trajectory path.
double centroid(const grid::GridWavefunction& psi) {
    const auto& g = psi.grid();
    const auto& c = psi.coefficients();
    double s = 0.0, m = 0.0;
    for (std::size_t k = 0; k < g.n_cells(); ++k) {
        const double w = std::norm(c[static_cast<Eigen::Index>(k)]);
        s += w * g.x(k);
        m += w;
    }
    if (!(m * g.dx() >= kMinNorm2)) throw InvalidInput("state norm^2 below 1e-20; centroid is undefined");
    return s / m;
}

double spread(const grid::GridWavefunction& psi) {
    const double x0 = centroid(psi);
    const auto& g = psi.grid();
    const auto& c = psi.coefficients();
    double s = 0.0, m = 0.0;
    for (std::size_t k = 0; k < g.n_cells(); ++k) {
        const double w = std::norm(c[static_cast<Eigen::Index>(k)]);
        const double u = g.x(k) - x0;
        s += w * u * u;
        m += w;
    }
    return std::sqrt(s / m);
}

double tau2(const DiscreteScalarMeasure& m, const MetricFn& d, const Eigen::VectorXd& x) {
    const double total = checked_total(m);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.weights()[i] == 0.0) continue;
        const double r = d(x, m.points()[i]);
        s += m.weights()[i] * r * r;
    }
    return s / total;
}

namespace {

std::vector<Eigen::VectorXd> lattice(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, std::size_t per_dim) {
    const auto d = lo.size();
    std::size_t count = 1;
    for (Eigen::Index i = 0; i < d; ++i) {
        count *= per_dim;
        if (count > 2'000'000) throw ResourceLimit("general_spread search lattice exceeds 2e6 points");
    }
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(count);
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    for (std::size_t n = 0; n < count; ++n) {
        Eigen::VectorXd p(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            const double f = per_dim == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(i)]) / static_cast<double>(per_dim - 1);
            p[i] = lo[i] + f * (hi[i] - lo[i]);
        }
        pts.push_back(std::move(p));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (++idx[i] < per_dim) break;
            idx[i] = 0;
        }
    }
    return pts;
}

}  // namespace

SpreadResult general_spread(const DiscreteScalarMeasure& m, const MetricFn& d, const SearchGrid& search) {
    if (search.lo.size() == 0 || search.lo.size() != search.hi.size() || search.points_per_dim < 1)
        throw InvalidInput("general_spread: empty search grid");
    if (static_cast<std::size_t>(search.lo.size()) != m.dim()) throw InvalidInput("general_spread: search grid dimension mismatch");
    if (((search.hi - search.lo).array() < 0.0).any()) throw InvalidInput("general_spread: search box has hi < lo");

    Eigen::VectorXd lo = search.lo, hi = search.hi;
    SpreadResult out;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t level = 0; level <= search.refinements; ++level) {
        const auto pts = lattice(lo, hi, search.points_per_dim);
        std::vector<double> vals(pts.size());
        std::size_t arg = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            vals[i] = tau2(m, d, pts[i]);
            if (vals[i] < vals[arg]) arg = i;
        }
        const Eigen::VectorXd step = (hi - lo) / static_cast<double>(std::max<std::size_t>(search.points_per_dim - 1, 1));
        if (level == 0) {
            // Ties among candidates separated by more than one cell signal a non-unique minimizer.
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (i == arg) continue;
                const bool tie = vals[i] - vals[arg] <= 1e-8 * std::max(vals[arg], 1e-300);
                const bool far = ((pts[i] - pts[arg]).array().abs() > 1.5 * step.array()).any();
                if (tie && far) out.ambiguous = true;
            }
        }
        if (vals[arg] <= best) {
            best = vals[arg];
            out.minimizer = pts[arg];
        }
        if (step.maxCoeff() == 0.0) break;
        lo = out.minimizer - step;
        hi = out.minimizer + step;
    }
    out.sigma = std::sqrt(best);
    return out;
}

SpreadResult general_spread(const DiscreteScalarMeasure& m, const ConfigMetric& metric, const SearchGrid& search) {
    return general_spread(
        m, [&metric](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return metric.distance(a, b); }, search);
}

void write_trajectory_csv(std::ostream& os, const std::vector<LabeledTrajectory>& rows) {
    os << "t,x,branch_id,prob\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.trajectory.t.size(); ++i) {
            const auto& x = r.trajectory.x[i];
            std::string xs;
            for (Eigen::Index c = 0; c < x.size(); ++c) {
                if (c) xs += ';';
                xs += format_double(x[c]);
            }
            os << format_double(r.trajectory.t[i]) << ',' << xs << ',' << r.branch_id << ','
               << format_double(r.probability) << '\n';
        }
    }
}

}  // namespace psd::geometry

#include "psd/scattering.hpp"

#include "fft.hpp"
#include "psd/error.hpp"
#include "psd/format.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace psd::scattering {

Eigen::VectorXd poschl_teller(const grid::GridSpec& grid, double V0, double a) {
    if (!(a > 0.0)) throw InvalidInput("well width must be positive");
    Eigen::VectorXd V(static_cast<Eigen::Index>(grid.n_cells()));
    for (std::size_t k = 0; k < grid.n_cells(); ++k) {
        const double c = std::cosh(grid.x(k) / a);
        V[static_cast<Eigen::Index>(k)] = -V0 / (c * c);
    }
    return V;
}

BoundStates solve_bound_states(const grid::GridSpec& grid, const Eigen::VectorXd& V, double mass, double hbar,
                               const BoundStateOptions& opts) {
    const std::size_t n = grid.n_cells();
    if (static_cast<std::size_t>(V.size()) != n) throw InvalidInput("potential length does not match grid");
    if (!V.allFinite()) throw InvalidInput("potential contains NaN or Inf");
    const std::size_t W = std::min(opts.window_cells, n);
    if (W < 16) throw InvalidInput("eigensolve window must hold at least 16 cells");

    Eigen::Index center = 0;
    V.minCoeff(&center);
    const long begin_l = std::clamp(static_cast<long>(center) - static_cast<long>(W / 2), 0L, static_cast<long>(n - W));
    const auto begin = static_cast<std::size_t>(begin_l);
    const double dx = grid.dx();

    // First column of the circulant kinetic matrix on the window.
    Eigen::VectorXcd K(static_cast<Eigen::Index>(W));
    const double dk = 2.0 * M_PI / (static_cast<double>(W) * dx);
    for (std::size_t j = 0; j < W; ++j) {
        const long f = j < (W + 1) / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(W);
        const double k = dk * static_cast<double>(f);
        K[static_cast<Eigen::Index>(j)] = hbar * hbar * k * k / (2.0 * mass);
    }
    detail::fft_inverse(K);
    const auto Wi = static_cast<Eigen::Index>(W);
    Eigen::MatrixXd H(Wi, Wi);
    for (Eigen::Index a = 0; a < Wi; ++a)
        for (Eigen::Index b = 0; b < Wi; ++b) H(a, b) = K[(a - b + Wi) % Wi].real() / static_cast<double>(W);
    for (Eigen::Index a = 0; a < Wi; ++a) H(a, a) += V[static_cast<Eigen::Index>(begin) + a];

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) throw ResolutionError("bound-state eigensolve did not converge");

    BoundStates out;
    out.window_begin = begin;
    out.window_cells = W;
    for (Eigen::Index i = 0; i < Wi; ++i) {
        const double lambda = es.eigenvalues()[i];
        if (!(lambda < opts.energy_cutoff)) break;
        Eigen::VectorXd v = es.eigenvectors().col(i);
        Eigen::Index big = 0;
        v.cwiseAbs().maxCoeff(&big);
        if (v[big] < 0.0) v = -v;  // fixed sign for reproducible output
        const double res = (H * v - lambda * v).norm();
        if (res > opts.residual_tol)
            throw ResolutionError("bound state " + std::to_string(i) + " eigen-residual " + format_double(res) +
                                  " exceeds " + format_double(opts.residual_tol) + "; shrink the window or refine dx");
        Eigen::VectorXcd s = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
        for (Eigen::Index a = 0; a < Wi; ++a) s[static_cast<Eigen::Index>(begin) + a] = v[a] / std::sqrt(dx);
        out.energies.push_back(lambda);
        out.residuals.push_back(res);
        out.states.emplace_back(grid, std::move(s), mass, hbar);
    }
    return out;
}

AsymptoticVelocityMeasure AsymptoticVelocityMeasure::free(double mass) {
    if (!(mass > 0.0)) throw InvalidInput("mass must be positive");
    AsymptoticVelocityMeasure F;
    F.kind_ = MeasureKind::free;
    F.mass_ = mass;
    return F;
}

AsymptoticVelocityMeasure AsymptoticVelocityMeasure::short_range(double mass, BoundStates bound) {
    if (!(mass > 0.0)) throw InvalidInput("mass must be positive");
    AsymptoticVelocityMeasure F;
    F.kind_ = MeasureKind::short_range;
    F.mass_ = mass;
    F.bound_ = std::move(bound);
    return F;
}

grid::GridWavefunction AsymptoticVelocityMeasure::bound_project(const grid::GridWavefunction& psi) const {
    grid::GridWavefunction out = zero_like(psi);
    if (kind_ == MeasureKind::free) return out;
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(psi.coefficients().size());
    for (const auto& phi : bound_.states) {
        if (!phi.compatible(psi)) throw InvalidInput("bound states live on a different grid");
        acc += inner(phi, psi) * phi.coefficients();
    }
    return psi.with_coefficients(std::move(acc));
}

grid::GridWavefunction AsymptoticVelocityMeasure::continuum_project(const grid::GridWavefunction& psi) const {
    if (kind_ == MeasureKind::free) return psi;
    return subtract(psi, bound_project(psi));
}

grid::GridWavefunction AsymptoticVelocityMeasure::velocity_project(const IntervalSet& delta,
                                                                   const grid::GridWavefunction& psi) const {
    const double m = mass_;
    auto mask = grid::RegionMask::from_predicate(psi.grid(), grid::Representation::momentum, psi.hbar(),
                                                 [&](double p) { return delta.contains(p / m); });
    if (kind_ == MeasureKind::free) return grid::momentum_project(psi, mask);
    return continuum_project(grid::momentum_project(continuum_project(psi), mask));
}

grid::GridWavefunction smoothed_velocity_filter(const IntervalSet& delta, const grid::GridWavefunction& psi, double mass,
                                                double edge_cells) {
    if (!(mass > 0.0)) throw InvalidInput("mass must be positive");
    if (!(edge_cells > 0.0)) throw InvalidInput("edge width must be positive");
    const auto& g = psi.grid();
    const double dp = g.dp(psi.hbar());
    const double half = 0.5 * edge_cells * dp;
    const auto edges = delta.boundary_points();
    Eigen::VectorXcd phi = psi.momentum_samples();
    for (std::size_t j = 0; j < g.n_cells(); ++j) {
        const double p = g.p(j, psi.hbar());
        double dist = kInf;
        for (double b : edges) dist = std::min(dist, std::abs(p - mass * b));
        const double sgn = delta.contains(p / mass) ? 1.0 : -1.0;
        const double s = std::clamp(sgn * dist / half, -1.0, 1.0);
        phi[static_cast<Eigen::Index>(j)] *= 0.5 * (1.0 + std::sin(0.5 * M_PI * s));
    }
    return grid::GridWavefunction::from_momentum_samples(g, phi, psi.mass(), psi.hbar());
}

ChannelPartition::ChannelPartition(std::vector<Channel> channels) : channels_(std::move(channels)) {
    if (channels_.empty()) throw InvalidInput("channel partition needs at least one channel");
    std::size_t bound = 0;
    std::vector<IntervalSet> vel;
    for (const auto& c : channels_) {
        if (c.kind == Channel::Kind::bound) ++bound;
        else vel.push_back(c.region);
    }
    if (bound > 1) throw InvalidInput("channel partition has more than one bound channel");
    IntervalSet u;
    for (std::size_t i = 0; i < vel.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (!vel[i].intersect(vel[j]).empty()) throw InvalidInput("velocity channels overlap");
        u = u.unite(vel[i]);
    }
    if (!(u == IntervalSet::all())) throw InvalidInput("velocity channels do not cover the real line");
}

ChannelPartition ChannelPartition::sign_split() {
    return ChannelPartition({Channel{Channel::Kind::velocity, IntervalSet::below(0.0), "v<0"},
                             Channel{Channel::Kind::velocity, IntervalSet::at_least(0.0), "v>=0"}});
}

ChannelPartition ChannelPartition::bound_and_continuum() {
    return ChannelPartition({Channel{Channel::Kind::bound, IntervalSet(), "bound"},
                             Channel{Channel::Kind::velocity, IntervalSet::all(), "continuum"}});
}

grid::GridWavefunction f_plus_project(const AsymptoticVelocityMeasure& F, const Channel& channel,
                                      const grid::GridWavefunction& psi) {
    if (channel.kind == Channel::Kind::bound) {
        if (F.kind() != MeasureKind::short_range) throw InvalidInput("bound channel needs a short-range measure");
        return F.bound_project(psi);
    }
    return F.velocity_project(channel.region, psi);
}

ProjectionResult f_t_project(const IntervalSet& delta, const grid::GridWavefunction& psi, double t,
                             const Propagator<grid::GridWavefunction>& U) {
    if (!(t > 0.0)) throw InvalidInput("f_t_project needs t > 0");
    ProjectionResult r{U(psi, t), {}};
    if (auto w = grid::wrap_warning(r.state)) r.warnings.push_back("t=" + format_double(t) + " " + *w);
    const auto& g = psi.grid();
    const double x_hi = g.x(g.n_cells() - 1);
    for (double b : delta.boundary_points())
        if (t * b < g.x_min() || t * b > x_hi)
            r.warnings.push_back("t=" + format_double(t) + " region boundary " + format_double(t * b) + " lies outside the box");
    auto mask = grid::RegionMask::from_predicate(g, grid::Representation::position, psi.hbar(),
                                                 [&](double x) { return delta.contains(x / t); });
    r.state = U(grid::position_project(r.state, mask), -t);
    return r;
}

DecayCurve convergence_diagnostic(const AsymptoticVelocityMeasure& F, const grid::GridWavefunction& psi,
                                  const std::vector<NamedRegion>& regions, const std::vector<double>& times,
                                  const Propagator<grid::GridWavefunction>& U, double boundary_density_tol) {
    DecayCurve c;
    c.times = times;
    const Eigen::VectorXd pd = psi.momentum_density();
    const double peak = pd.maxCoeff();
    const double dp = psi.grid().dp(psi.hbar());
    for (const auto& nr : regions) {
        c.region_names.push_back(nr.name);
        for (double b : nr.region.boundary_points()) {
            const double pb = F.mass() * b;
            double local = 0.0;
            for (std::size_t j = 0; j < psi.grid().n_cells(); ++j)
                if (std::abs(psi.grid().p(j, psi.hbar()) - pb) <= dp) local = std::max(local, pd[static_cast<Eigen::Index>(j)]);
            if (local > boundary_density_tol * peak)
                c.warnings.push_back("boundary-mass: region " + nr.name + " boundary v=" + format_double(b) +
                                     " carries velocity density " + format_double(local / peak) + " of peak; expect slow decay");
        }
        const auto fp = F.velocity_project(nr.region, psi);
        std::vector<double> e;
        for (double t : times) {
            auto ft = f_t_project(nr.region, psi, t, U);
            for (auto& w : ft.warnings)
                if (std::find(c.warnings.begin(), c.warnings.end(), w) == c.warnings.end()) c.warnings.push_back(w);
            e.push_back(norm(subtract(ft.state, fp)));
        }
        c.e.push_back(std::move(e));
    }
    return c;
}

Theorem2Curve theorem2_curve(const AsymptoticVelocityMeasure& F, const grid::GridWavefunction& psi,
                             const ChannelPartition& X, const std::vector<double>& times,
                             const Propagator<grid::GridWavefunction>& U, const Theorem2Options& opts) {
    psd::detail::check_time_grid(times);
    Theorem2Curve c;
    c.times = times;
    const double total = norm2(psi);
    std::vector<grid::GridWavefunction> parts;
    for (const auto& ch : X.channels()) {
        auto e = f_plus_project(F, ch, psi);
        if (norm2(e) < opts.min_fraction * total) {
            c.dropped_channels.push_back(ch.name);
            c.warnings.push_back("channel " + ch.name + " carries less than " + format_double(opts.min_fraction) +
                                 " of the norm and was dropped");
            continue;
        }
        parts.push_back(std::move(e));
    }
    if (parts.size() < 2)
        throw InvalidInput("theorem2_curve: fewer than two channels carry mass; w needs n >= 2");

    Decomposition<grid::GridWavefunction> D(std::move(parts));
    double t_prev = 0.0;
    bool wrapped = false;
    for (double t : times) {
        if (t != t_prev) D = D.propagated(U, t - t_prev);
        t_prev = t;
        const auto r = w_general(grid::Representation::position, D);
        c.w.push_back(r.value);
        c.certified.push_back(r.certified);
        if (opts.control_lane) c.control_w.push_back(w_general(grid::Representation::momentum, D).value);
        if (!wrapped) {
            for (const auto& e : D.elements())
                if (auto w = grid::wrap_warning(e)) {
                    c.warnings.push_back("t=" + format_double(t) + " " + *w);
                    wrapped = true;
                    break;
                }
        }
    }
    c.transient_index = static_cast<std::size_t>(std::max_element(c.w.begin(), c.w.end()) - c.w.begin());
    c.transient_time = times[c.transient_index];
    for (std::size_t i = c.transient_index + 1; i < c.w.size(); ++i)
        c.max_increase_after_transient = std::max(c.max_increase_after_transient, c.w[i] - c.w[i - 1]);
    c.monotone_after_transient = c.max_increase_after_transient <= opts.jitter;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = times.size() / 2; i < times.size(); ++i) {
        if (!(times[i] > 0.0) || !(c.w[i] > 0.0)) continue;
        const double lx = std::log(times[i]), ly = std::log(c.w[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++cnt;
    }
    if (cnt >= 2 && cnt * sxx - sx * sx > 0.0) c.tail_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return c;
}

void write_decay_csv(std::ostream& os, const Theorem2Curve& curve, const DecayCurve* diag) {
    for (const auto& w : curve.warnings) os << "# " << w << '\n';
    if (diag)
        for (const auto& w : diag->warnings) os << "# " << w << '\n';
    os << "t,w_E";
    const bool control = !curve.control_w.empty();
    if (control) os << ",w_F";
    if (diag)
        for (const auto& n : diag->region_names) os << ",e_" << n;
    os << '\n';
    std::map<double, std::size_t> diag_index;
    if (diag)
        for (std::size_t i = 0; i < diag->times.size(); ++i) diag_index[diag->times[i]] = i;
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        os << format_double(curve.times[i]) << ',' << format_double(curve.w[i]);
        if (control) os << ',' << format_double(curve.control_w[i]);
        if (diag) {
            auto it = diag_index.find(curve.times[i]);
            for (std::size_t r = 0; r < diag->e.size(); ++r) {
                os << ',';
                if (it != diag_index.end()) os << format_double(diag->e[r][it->second]);
            }
        }
        os << '\n';
    }
}

}  // namespace psd::scattering

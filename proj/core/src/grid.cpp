#include "psd/grid.hpp"

#include "fft.hpp"
#include "psd/error.hpp"
#include "psd/format.hpp"
#include "psd/special.hpp"

#include <cmath>
#include <sstream>

namespace psd::grid {
namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

long fftfreq(std::size_t j, std::size_t n) {
    const auto jj = static_cast<long>(j);
    const auto nn = static_cast<long>(n);
    return jj < (nn + 1) / 2 ? jj : jj - nn;
}

}  // namespace

GridSpec::GridSpec(std::size_t n_cells, double box_length, double origin_offset)
    : n_(n_cells), length_(box_length), offset_(origin_offset) {
    if (n_cells < 16 || !is_pow2(n_cells))
        throw InvalidInput("grid n_cells must be a power of two >= 16, got " + std::to_string(n_cells));
    if (!(box_length > 0.0) || !std::isfinite(box_length))
        throw InvalidInput("grid box_length must be positive and finite");
    if (!std::isfinite(origin_offset)) throw InvalidInput("grid origin_offset must be finite");
}

double GridSpec::dp(double hbar) const { return 2.0 * M_PI * hbar / length_; }

double GridSpec::p(std::size_t j, double hbar) const {
    return dp(hbar) * static_cast<double>(fftfreq(j, n_));
}

Eigen::VectorXd GridSpec::positions() const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(n_));
    for (std::size_t k = 0; k < n_; ++k) x[static_cast<Eigen::Index>(k)] = this->x(k);
    return x;
}

Eigen::VectorXd GridSpec::momenta(double hbar) const {
    Eigen::VectorXd p(static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < n_; ++j) p[static_cast<Eigen::Index>(j)] = this->p(j, hbar);
    return p;
}

const char* to_string(Representation r) {
    return r == Representation::position ? "position" : "momentum";
}

GridWavefunction::GridWavefunction(GridSpec grid, Eigen::VectorXcd samples, double mass, double hbar)
    : grid_(grid), samples_(std::move(samples)), mass_(mass), hbar_(hbar) {
    if (static_cast<std::size_t>(samples_.size()) != grid_.n_cells())
        throw InvalidInput("wavefunction sample count does not match grid");
    if (!(mass > 0.0) || !(hbar > 0.0)) throw InvalidInput("mass and hbar must be positive");
    if (!samples_.allFinite()) throw InvalidInput("wavefunction samples must be finite");
}

GridWavefunction GridWavefunction::with_coefficients(Eigen::VectorXcd v) const {
    return GridWavefunction(grid_, std::move(v), mass_, hbar_);
}

bool GridWavefunction::compatible(const GridWavefunction& o) const {
    return grid_ == o.grid_ && mass_ == o.mass_ && hbar_ == o.hbar_;
}

Eigen::VectorXd GridWavefunction::density() const { return samples_.cwiseAbs2(); }

Eigen::VectorXcd GridWavefunction::momentum_samples() const {
    Eigen::VectorXcd phi = samples_;
    detail::fft_forward(phi);
    const double pref = grid_.dx() / std::sqrt(2.0 * M_PI * hbar_);
    const double x0 = grid_.x_min();
    for (Eigen::Index j = 0; j < phi.size(); ++j) {
        const double pj = grid_.p(static_cast<std::size_t>(j), hbar_);
        phi[j] *= pref * std::polar(1.0, -pj * x0 / hbar_);
    }
    return phi;
}

Eigen::VectorXd GridWavefunction::momentum_density() const { return momentum_samples().cwiseAbs2(); }

GridWavefunction GridWavefunction::from_momentum_samples(const GridSpec& grid, const Eigen::VectorXcd& phi,
                                                         double mass, double hbar) {
    if (static_cast<std::size_t>(phi.size()) != grid.n_cells())
        throw InvalidInput("momentum sample count does not match grid");
    Eigen::VectorXcd v = phi;
    const double x0 = grid.x_min();
    const double pref = std::sqrt(2.0 * M_PI * hbar) / grid.dx();
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        const double pj = grid.p(static_cast<std::size_t>(j), hbar);
        v[j] *= pref * std::polar(1.0, pj * x0 / hbar);
    }
    detail::fft_inverse(v);
    v /= static_cast<double>(grid.n_cells());
    return GridWavefunction(grid, std::move(v), mass, hbar);
}

RegionMask RegionMask::complement() const {
    RegionMask out{rep, in};
    for (auto& c : out.in) c = c ? 0 : 1;
    return out;
}

RegionMask RegionMask::all(Representation rep, std::size_t n) { return RegionMask{rep, std::vector<char>(n, 1)}; }

RegionMask RegionMask::none(Representation rep, std::size_t n) { return RegionMask{rep, std::vector<char>(n, 0)}; }

RegionMask RegionMask::from_predicate(const GridSpec& grid, Representation rep, double hbar,
                                      const std::function<bool(double)>& pred) {
    RegionMask m{rep, std::vector<char>(grid.n_cells(), 0)};
    for (std::size_t k = 0; k < grid.n_cells(); ++k) {
        const double c = rep == Representation::position ? grid.x(k) : grid.p(k, hbar);
        m.in[k] = pred(c) ? 1 : 0;
    }
    return m;
}

GridWavefunction make_gaussian(const GaussianPacketParams& params, int sign, const GridSpec& grid) {
    if (sign != 1 && sign != -1) throw InvalidInput("gaussian sign must be +1 or -1");
    if (!(params.sigma_p > 0.0)) throw InvalidInput("sigma_p must be positive");
    const double sx = params.sigma_x();
    const double dx = grid.dx();
    std::ostringstream why;
    if (dx > sx / 8.0)
        why << "cell width " << dx << " exceeds sigma_x/8 = " << sx / 8.0 << "; raise n_cells to at least "
            << grid.n_cells() * static_cast<std::size_t>(std::exp2(std::ceil(std::log2(dx * 8.0 / sx)))) << ". ";
    if (grid.box_length() < 20.0 * sx)
        why << "box_length " << grid.box_length() << " is below 20 sigma_x = " << 20.0 * sx << ". ";
    if (std::abs(params.p0) + 6.0 * params.sigma_p > grid.p_max(params.hbar))
        why << "|p0| + 6 sigma_p exceeds the grid Nyquist momentum " << grid.p_max(params.hbar)
            << "; reduce dx. ";
    const double edge = std::min(params.x0 - grid.x_min(), grid.x_min() + grid.box_length() - params.x0);
    if (edge < 5.0 * sx) why << "x0 lies within 5 sigma_x of the box edge; move x0 or enlarge the box. ";
    if (!why.str().empty()) throw ResolutionError("gaussian packet under-resolved: " + why.str());

    const double amp = 1.0 / std::sqrt(std::sqrt(M_PI) * sx);
    Eigen::VectorXcd s(static_cast<Eigen::Index>(grid.n_cells()));
    for (std::size_t k = 0; k < grid.n_cells(); ++k) {
        const double u = grid.x(k) - params.x0;
        s[static_cast<Eigen::Index>(k)] =
            amp * std::exp(-u * u / (2.0 * sx * sx)) * std::polar(1.0, sign * params.p0 * u / params.hbar);
    }
    return GridWavefunction(grid, std::move(s), params.mass, params.hbar);
}

namespace {

void kinetic_phase_inplace(Eigen::VectorXcd& v, const GridSpec& grid, double mass, double hbar, double dt) {
    detail::fft_forward(v);
    const double inv_n = 1.0 / static_cast<double>(grid.n_cells());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        const double p = grid.p(static_cast<std::size_t>(j), hbar);
        v[j] *= std::polar(inv_n, -p * p * dt / (2.0 * mass * hbar));
    }
    detail::fft_inverse(v);
}

}  // namespace

GridWavefunction propagate_free(const GridWavefunction& psi, double dt) {
    if (!std::isfinite(dt)) throw InvalidInput("propagation time must be finite");
    if (dt == 0.0) return psi;
    Eigen::VectorXcd v = psi.coefficients();
    kinetic_phase_inplace(v, psi.grid(), psi.mass(), psi.hbar(), dt);
    return psi.with_coefficients(std::move(v));
}

GridWavefunction propagate_potential(const GridWavefunction& psi, const Eigen::VectorXd& V, double dt,
                                     std::size_t n_steps) {
    if (n_steps < 1) throw InvalidInput("n_steps must be >= 1");
    if (!std::isfinite(dt)) throw InvalidInput("time step must be finite");
    if (static_cast<std::size_t>(V.size()) != psi.grid().n_cells())
        throw InvalidInput("potential length does not match grid");
    if (!V.allFinite()) throw InvalidInput("potential contains NaN or Inf");

    const double hbar = psi.hbar();
    Eigen::VectorXcd half(V.size()), full(V.size());
    for (Eigen::Index k = 0; k < V.size(); ++k) {
        half[k] = std::polar(1.0, -V[k] * dt / (2.0 * hbar));
        full[k] = std::polar(1.0, -V[k] * dt / hbar);
    }
    Eigen::VectorXcd v = psi.coefficients().cwiseProduct(half);
    for (std::size_t s = 0; s < n_steps; ++s) {
        kinetic_phase_inplace(v, psi.grid(), psi.mass(), hbar, dt);
        // Adjacent half kicks merge into one full kick.
        v = v.cwiseProduct(s + 1 < n_steps ? full : half);
    }
    return psi.with_coefficients(std::move(v));
}

Propagator<GridWavefunction> free_propagator() {
    return [](const GridWavefunction& psi, double t) { return propagate_free(psi, t); };
}

StrangPropagator::StrangPropagator(Eigen::VectorXd potential, double max_dt)
    : V_(std::move(potential)), max_dt_(max_dt) {
    if (!(max_dt > 0.0)) throw InvalidInput("Strang max_dt must be positive");
    if (!V_.allFinite()) throw InvalidInput("potential contains NaN or Inf");
}

GridWavefunction StrangPropagator::operator()(const GridWavefunction& psi, double t) const {
    if (t == 0.0) return psi;
    const auto steps = static_cast<std::size_t>(std::ceil(std::abs(t) / max_dt_ - 1e-9));
    const std::size_t n = steps == 0 ? 1 : steps;
    return propagate_potential(psi, V_, t / static_cast<double>(n), n);
}

GridWavefunction position_project(const GridWavefunction& psi, const RegionMask& mask) {
    if (mask.rep != Representation::position) throw InvalidInput("position_project needs a position mask");
    if (mask.size() != psi.grid().n_cells()) throw InvalidInput("mask length does not match grid");
    Eigen::VectorXcd v = psi.coefficients();
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (!mask.in[static_cast<std::size_t>(k)]) v[k] = 0.0;
    return psi.with_coefficients(std::move(v));
}

GridWavefunction momentum_project(const GridWavefunction& psi, const RegionMask& mask) {
    if (mask.rep != Representation::momentum) throw InvalidInput("momentum_project needs a momentum mask");
    if (mask.size() != psi.grid().n_cells()) throw InvalidInput("mask length does not match grid");
    Eigen::VectorXcd v = psi.coefficients();
    detail::fft_forward(v);
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (!mask.in[static_cast<std::size_t>(j)]) v[j] = 0.0;
    detail::fft_inverse(v);
    v /= static_cast<double>(v.size());
    return psi.with_coefficients(std::move(v));
}

GridWavefunction project(const GridWavefunction& psi, const RegionMask& mask) {
    return mask.rep == Representation::position ? position_project(psi, mask) : momentum_project(psi, mask);
}

double gaussian_separation_ratio(const GaussianPacketParams& params, double t) {
    const double sp2 = params.sigma_p * params.sigma_p;
    const double a = params.mass * params.hbar / sp2;
    return (params.p0 / params.sigma_p) * t / std::sqrt(a * a + t * t);
}

double analytic_gaussian_wE(const GaussianPacketParams& params, double t) {
    if (t < 0.0) throw InvalidInput("analytic_gaussian_wE needs t >= 0");
    return std::sqrt(std::erfc(gaussian_separation_ratio(params, t)));
}

double log_analytic_gaussian_wE(const GaussianPacketParams& params, double t) {
    if (t < 0.0) throw InvalidInput("log_analytic_gaussian_wE needs t >= 0");
    return 0.5 * log_erfc(gaussian_separation_ratio(params, t));
}

double gaussian_width(const GaussianPacketParams& params, double t) {
    const double sx = params.sigma_x();
    const double s = params.hbar * t / (params.mass * sx);
    return std::sqrt(sx * sx + s * s);
}

std::optional<std::string> wrap_warning(const GridWavefunction& psi, double threshold, std::size_t edge_cells) {
    const auto n = psi.grid().n_cells();
    const std::size_t e = std::min(edge_cells, n / 2);
    double worst = 0.0;
    const auto& c = psi.coefficients();
    for (std::size_t k = 0; k < e; ++k) {
        worst = std::max(worst, std::norm(c[static_cast<Eigen::Index>(k)]));
        worst = std::max(worst, std::norm(c[static_cast<Eigen::Index>(n - 1 - k)]));
    }
    if (worst > threshold)
        return "wrap: boundary density " + format_double(worst) + " exceeds " + format_double(threshold);
    return std::nullopt;
}

void write_snapshot_csv(std::ostream& os, const GridWavefunction& psi) {
    os << "x,re,im,density\n";
    const auto& c = psi.coefficients();
    for (std::size_t k = 0; k < psi.grid().n_cells(); ++k) {
        const auto z = c[static_cast<Eigen::Index>(k)];
        os << format_double(psi.grid().x(k)) << ',' << format_double(z.real()) << ',' << format_double(z.imag())
           << ',' << format_double(std::norm(z)) << '\n';
    }
}

}  // namespace psd::grid

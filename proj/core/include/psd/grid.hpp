#pragma once

#include "psd/state.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace psd::grid {

// Uniform periodic grid x_k = origin_offset - L/2 + k dx, k = 0..n-1.
class GridSpec {
public:
    GridSpec(std::size_t n_cells, double box_length, double origin_offset = 0.0);

    std::size_t n_cells() const { return n_; }
    double box_length() const { return length_; }
    double origin_offset() const { return offset_; }
    double dx() const { return length_ / static_cast<double>(n_); }
    double x_min() const { return offset_ - 0.5 * length_; }
    double x(std::size_t k) const { return x_min() + static_cast<double>(k) * dx(); }
    // Momentum of DFT mode j in fftfreq order, scaled by 2 pi hbar / L.
    double p(std::size_t j, double hbar) const;
    double dp(double hbar) const;
    double p_max(double hbar) const { return M_PI * hbar / dx(); }

    Eigen::VectorXd positions() const;
    Eigen::VectorXd momenta(double hbar) const;

    bool operator==(const GridSpec& o) const = default;

private:
    std::size_t n_;
    double length_;
    double offset_;
};

enum class Representation { position, momentum };

const char* to_string(Representation r);

class GridWavefunction {
public:
    GridWavefunction(GridSpec grid, Eigen::VectorXcd samples, double mass = 1.0, double hbar = 1.0);

    const GridSpec& grid() const { return grid_; }
    double mass() const { return mass_; }
    double hbar() const { return hbar_; }

    const Eigen::VectorXcd& coefficients() const { return samples_; }
    double cell_weight() const { return grid_.dx(); }
    GridWavefunction with_coefficients(Eigen::VectorXcd v) const;
    bool compatible(const GridWavefunction& o) const;

    Eigen::VectorXd density() const;
    // phi(p_j), normalized so that sum |phi_j|^2 dp = sum |psi_k|^2 dx.
    Eigen::VectorXcd momentum_samples() const;
    Eigen::VectorXd momentum_density() const;
    static GridWavefunction from_momentum_samples(const GridSpec& grid, const Eigen::VectorXcd& phi,
                                                  double mass = 1.0, double hbar = 1.0);

private:
    GridSpec grid_;
    Eigen::VectorXcd samples_;
    double mass_;
    double hbar_;
};

struct RegionMask {
    Representation rep = Representation::position;
    std::vector<char> in;

    std::size_t size() const { return in.size(); }
    RegionMask complement() const;
    static RegionMask all(Representation rep, std::size_t n);
    static RegionMask none(Representation rep, std::size_t n);
    // Position masks test x_k; momentum masks test p_j (same layout as momentum_samples).
    static RegionMask from_predicate(const GridSpec& grid, Representation rep, double hbar,
                                     const std::function<bool(double)>& pred);
};

struct GaussianPacketParams {
    double p0 = 0.0;
    double sigma_p = 1.0;
    double x0 = 0.0;
    double mass = 1.0;
    double hbar = 1.0;

    double sigma_x() const { return hbar / sigma_p; }
};

GridWavefunction make_gaussian(const GaussianPacketParams& params, int sign, const GridSpec& grid);

GridWavefunction propagate_free(const GridWavefunction& psi, double dt);
GridWavefunction propagate_potential(const GridWavefunction& psi, const Eigen::VectorXd& V, double dt,
                                     std::size_t n_steps);

Propagator<GridWavefunction> free_propagator();

// U(t) via Strang steps no longer than max_dt; negative t runs backwards.
class StrangPropagator {
public:
    StrangPropagator(Eigen::VectorXd potential, double max_dt);
    GridWavefunction operator()(const GridWavefunction& psi, double t) const;
    const Eigen::VectorXd& potential() const { return V_; }
    double max_dt() const { return max_dt_; }

private:
    Eigen::VectorXd V_;
    double max_dt_;
};

GridWavefunction position_project(const GridWavefunction& psi, const RegionMask& mask);
GridWavefunction momentum_project(const GridWavefunction& psi, const RegionMask& mask);
GridWavefunction project(const GridWavefunction& psi, const RegionMask& mask);

// Ratio of packet separation to width, x(t)/sigma(t) for the symmetric pair.
double gaussian_separation_ratio(const GaussianPacketParams& params, double t);
double analytic_gaussian_wE(const GaussianPacketParams& params, double t);
double log_analytic_gaussian_wE(const GaussianPacketParams& params, double t);
double gaussian_width(const GaussianPacketParams& params, double t);

// Returns a message when density within edge_cells of either boundary exceeds threshold.
std::optional<std::string> wrap_warning(const GridWavefunction& psi, double threshold = 1e-8,
                                        std::size_t edge_cells = 10);

void write_snapshot_csv(std::ostream& os, const GridWavefunction& psi);

}  // namespace psd::grid

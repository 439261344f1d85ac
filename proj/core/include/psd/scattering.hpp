#pragma once

#include "psd/decomposition.hpp"
#include "psd/grid.hpp"
#include "psd/interval_set.hpp"
#include "psd/partition_search.hpp"
#include "psd/proximity.hpp"

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace psd::scattering {

struct BoundStates {
    std::vector<double> energies;
    std::vector<grid::GridWavefunction> states;  // normalized, embedded in the full grid
    std::vector<double> residuals;               // ||H v - lambda v|| on the eigensolve window
    std::size_t window_begin = 0;
    std::size_t window_cells = 0;
};

struct BoundStateOptions {
    std::size_t window_cells = 1024;  // dense eigensolve size, centered on the potential minimum
    double energy_cutoff = -1e-3;     // eigenvalues below this count as bound
    double residual_tol = 1e-8;
};

// Dense eigensolve of T + V with the spectral (Fourier) kinetic operator, the
// same operator the split-step propagator exponentiates.
BoundStates solve_bound_states(const grid::GridSpec& grid, const Eigen::VectorXd& V, double mass, double hbar,
                               const BoundStateOptions& opts = {});

// Poschl-Teller well -V0 sech^2(x/a) sampled on the grid.
Eigen::VectorXd poschl_teller(const grid::GridSpec& grid, double V0, double a);

enum class MeasureKind { free, short_range };

class AsymptoticVelocityMeasure {
public:
    static AsymptoticVelocityMeasure free(double mass);
    static AsymptoticVelocityMeasure short_range(double mass, BoundStates bound);

    MeasureKind kind() const { return kind_; }
    double mass() const { return mass_; }
    const BoundStates& bound() const { return bound_; }

    grid::GridWavefunction bound_project(const grid::GridWavefunction& psi) const;
    grid::GridWavefunction continuum_project(const grid::GridWavefunction& psi) const;
    // Free: momentum mask p in m*Delta. Short-range: Q_c M(Delta) Q_c on the
    // continuum, an approximation of F_+(Delta) that is exact for Delta = R.
    grid::GridWavefunction velocity_project(const IntervalSet& delta, const grid::GridWavefunction& psi) const;

private:
    MeasureKind kind_ = MeasureKind::free;
    double mass_ = 1.0;
    BoundStates bound_;
};

// Not a projection: the sharp momentum mask p in m*Delta with each edge replaced
// by a raised-cosine ramp over edge_cells momentum cells. Trades exactness of
// F_+ for faster decay of spatial tails.
grid::GridWavefunction smoothed_velocity_filter(const IntervalSet& delta, const grid::GridWavefunction& psi, double mass,
                                                double edge_cells = 4.0);

struct Channel {
    enum class Kind { bound, velocity };
    Kind kind = Kind::velocity;
    IntervalSet region = IntervalSet::all();
    std::string name;
};

class ChannelPartition {
public:
    explicit ChannelPartition(std::vector<Channel> channels);
    static ChannelPartition sign_split();           // {v < 0, v >= 0}
    static ChannelPartition bound_and_continuum();  // {bound, all velocities of the continuum}

    const std::vector<Channel>& channels() const { return channels_; }
    std::size_t size() const { return channels_.size(); }

private:
    std::vector<Channel> channels_;
};

grid::GridWavefunction f_plus_project(const AsymptoticVelocityMeasure& F, const Channel& channel,
                                      const grid::GridWavefunction& psi);

struct ProjectionResult {
    grid::GridWavefunction state;
    std::vector<std::string> warnings;
};

// F_t(Delta) psi = U(-t) E(t Delta) U(t) psi.
ProjectionResult f_t_project(const IntervalSet& delta, const grid::GridWavefunction& psi, double t,
                             const Propagator<grid::GridWavefunction>& U);

struct DecayCurve {
    std::vector<double> times;
    std::vector<std::string> region_names;
    std::vector<std::vector<double>> e;  // e[region][time] = ||F_t(Delta)psi - F_+(Delta)psi||
    std::vector<std::string> warnings;
};

struct NamedRegion {
    std::string name;
    IntervalSet region;
};

// Boundary-mass warnings fire when the F_+ velocity density at a region
// boundary exceeds boundary_density_tol times its peak.
DecayCurve convergence_diagnostic(const AsymptoticVelocityMeasure& F, const grid::GridWavefunction& psi,
                                  const std::vector<NamedRegion>& regions, const std::vector<double>& times,
                                  const Propagator<grid::GridWavefunction>& U, double boundary_density_tol = 1e-3);

struct Theorem2Curve {
    std::vector<double> times;
    std::vector<double> w;              // spatial w of U(t) F_+(X) psi
    std::vector<bool> certified;
    std::vector<double> control_w;      // momentum-representation w, empty if not requested
    std::size_t transient_index = 0;    // index of the maximum of w
    double transient_time = 0.0;
    bool monotone_after_transient = false;  // no increase above jitter after the transient
    double max_increase_after_transient = 0.0;
    double tail_slope = 0.0;            // log-log slope over the second half of the samples
    std::vector<std::string> dropped_channels;
    std::vector<std::string> warnings;
};

struct Theorem2Options {
    double min_fraction = 1e-6;  // channels below this share of ||psi||^2 are dropped
    double jitter = 1e-3;
    bool control_lane = false;   // also evaluate w in the momentum representation
};

Theorem2Curve theorem2_curve(const AsymptoticVelocityMeasure& F, const grid::GridWavefunction& psi,
                             const ChannelPartition& X, const std::vector<double>& times,
                             const Propagator<grid::GridWavefunction>& U, const Theorem2Options& opts = {});

// Columns t, w_E, then e_<region> per diagnostic region; warnings as '#' rows.
void write_decay_csv(std::ostream& os, const Theorem2Curve& curve, const DecayCurve* diag = nullptr);

}  // namespace psd::scattering

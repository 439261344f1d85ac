#pragma once

#include "psd/grid.hpp"
#include "psd/scalar_measure.hpp"
#include "psd/tree.hpp"

#include <Eigen/Dense>

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace psd::geometry {

// d(x, y) = scale * sqrt(sum_i m_i |x_i - y_i|^2 / M) on (R^spatial_dim)^#masses.
class ConfigMetric {
public:
    explicit ConfigMetric(std::vector<double> masses, std::size_t spatial_dim = 1, double scale = 1.0);
    static ConfigMetric euclidean(std::size_t dim) { return ConfigMetric({1.0}, dim); }

    std::size_t dim() const { return masses_.size() * spatial_dim_; }
    double total_mass() const { return total_; }
    const std::vector<double>& masses() const { return masses_; }
    std::size_t spatial_dim() const { return spatial_dim_; }
    double scale() const { return scale_; }
    double distance2(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    double distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    ConfigMetric scaled(double c) const;

private:
    std::vector<double> masses_;
    std::size_t spatial_dim_;
    double scale_;
    double total_ = 0.0;
};

inline constexpr double kMinNorm2 = 1e-20;

Eigen::VectorXd centroid(const DiscreteScalarMeasure& m);
double spread(const DiscreteScalarMeasure& m, const ConfigMetric& metric);

// Position measure E_psi on the grid: points x_k, weights |psi_k|^2 dx.
DiscreteScalarMeasure position_measure(const grid::GridWavefunction& psi);
double centroid(const grid::GridWavefunction& psi);
double spread(const grid::GridWavefunction& psi);

using MetricFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct SearchGrid {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    std::size_t points_per_dim = 41;
    std::size_t refinements = 12;
};

struct SpreadResult {
    double sigma = 0.0;
    Eigen::VectorXd minimizer;
    bool ambiguous = false;  // several separated candidates tie within 1e-8
};

// tau^2(x) = int d^2(x, y) dE_psi(y) / ||psi||^2
double tau2(const DiscreteScalarMeasure& m, const MetricFn& d, const Eigen::VectorXd& x);
SpreadResult general_spread(const DiscreteScalarMeasure& m, const MetricFn& d, const SearchGrid& search);
SpreadResult general_spread(const DiscreteScalarMeasure& m, const ConfigMetric& metric, const SearchGrid& search);

struct Trajectory {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> x;
};

template <HilbertState S>
Trajectory branch_trajectory(const tree::SpatialTree<S>& T, const tree::Branch& b, const std::vector<double>& times,
                             const std::function<Eigen::VectorXd(const S&)>& centroid_of) {
    Trajectory out;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0 && !(times[i] > times[i - 1])) throw InvalidInput("trajectory times must be strictly increasing");
        out.t.push_back(times[i]);
        out.x.push_back(centroid_of(tree::branch_state(T, b, times[i])));
    }
    return out;
}

inline Trajectory branch_trajectory(const tree::SpatialTree<grid::GridWavefunction>& T, const tree::Branch& b,
                                    const std::vector<double>& times) {
    return branch_trajectory<grid::GridWavefunction>(
        T, b, times, [](const grid::GridWavefunction& s) { return Eigen::VectorXd::Constant(1, centroid(s)); });
}

struct LabeledTrajectory {
    std::size_t branch_id = 0;
    double probability = 0.0;
    Trajectory trajectory;
};

// Columns t, x, branch_id, prob; multi-dimensional points join coordinates with ';'.
void write_trajectory_csv(std::ostream& os, const std::vector<LabeledTrajectory>& rows);

}  // namespace psd::geometry

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace psd {

// Finitely supported nonnegative measure on R^d.
class DiscreteScalarMeasure {
public:
    DiscreteScalarMeasure(std::vector<Eigen::VectorXd> points, std::vector<double> weights);
    // One-dimensional convenience form.
    DiscreteScalarMeasure(const std::vector<double>& points, std::vector<double> weights);

    std::size_t size() const { return weights_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<Eigen::VectorXd>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    double total() const;
    double measure_of(const std::function<bool(const Eigen::VectorXd&)>& in) const;

private:
    std::vector<Eigen::VectorXd> points_;
    std::vector<double> weights_;
    std::size_t dim_ = 0;
};

}  // namespace psd

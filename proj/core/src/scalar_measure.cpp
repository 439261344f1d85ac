#include "psd/scalar_measure.hpp"

#include "psd/error.hpp"

#include <cmath>

namespace psd {

DiscreteScalarMeasure::DiscreteScalarMeasure(std::vector<Eigen::VectorXd> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.size() != weights_.size()) throw InvalidInput("measure needs one weight per point");
    if (points_.empty()) throw InvalidInput("measure needs at least one support point");
    dim_ = static_cast<std::size_t>(points_.front().size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (static_cast<std::size_t>(points_[i].size()) != dim_) throw InvalidInput("measure points differ in dimension");
        if (!points_[i].allFinite()) throw InvalidInput("measure point is not finite");
        if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) throw InvalidInput("measure weight must be finite and >= 0");
    }
}

namespace {
std::vector<Eigen::VectorXd> lift(const std::vector<double>& xs) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(Eigen::VectorXd::Constant(1, x));
    return out;
}
}  // namespace

DiscreteScalarMeasure::DiscreteScalarMeasure(const std::vector<double>& points, std::vector<double> weights)
    : DiscreteScalarMeasure(lift(points), std::move(weights)) {}

double DiscreteScalarMeasure::total() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
}

double DiscreteScalarMeasure::measure_of(const std::function<bool(const Eigen::VectorXd&)>& in) const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        if (in(points_[i])) s += weights_[i];
    return s;
}

}  // namespace psd

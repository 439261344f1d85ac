#pragma once

#include <limits>
#include <string>
#include <vector>

namespace psd {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Infinite endpoints are always stored as open.
struct Interval {
    double lo = -kInf;
    double hi = kInf;
    bool lo_closed = false;
    bool hi_closed = false;

    bool contains(double x) const;
    bool empty() const;
    bool operator==(const Interval&) const = default;
};

// Finite union of intervals on the real line, kept sorted, disjoint and
// maximally merged so that equality of sets is equality of representations.
class IntervalSet {
public:
    IntervalSet() = default;
    explicit IntervalSet(std::vector<Interval> parts);

    static IntervalSet all();
    static IntervalSet point(double x);
    static IntervalSet closed(double a, double b);
    static IntervalSet open(double a, double b);
    static IntervalSet closed_open(double a, double b);
    static IntervalSet open_closed(double a, double b);
    static IntervalSet at_most(double x);   // (-inf, x]
    static IntervalSet below(double x);     // (-inf, x)
    static IntervalSet at_least(double x);  // [x, inf)
    static IntervalSet above(double x);     // (x, inf)

    const std::vector<Interval>& parts() const { return parts_; }
    bool empty() const { return parts_.empty(); }
    bool contains(double x) const;

    IntervalSet unite(const IntervalSet& o) const;
    IntervalSet intersect(const IntervalSet& o) const;
    IntervalSet complement() const;
    IntervalSet minus(const IntervalSet& o) const;
    IntervalSet symmetric_difference(const IntervalSet& o) const;
    IntervalSet scaled(double c) const;  // {c x : x in set}, c > 0

    IntervalSet closure() const;
    // {x : d(x, set) <= eta}.
    IntervalSet dilate_closure(double eta) const;
    // Closed set whose finite endpoints sit eta outside closed endpoints and
    // eta inside open ones. Equals dilate_closure(eta) for closed sets.
    IntervalSet endpoint_shift(double eta) const;
    double distance_to_closure(double x) const;
    std::vector<double> boundary_points() const;

    std::string to_string() const;
    bool operator==(const IntervalSet&) const = default;

private:
    void normalize();
    std::vector<Interval> parts_;
};

}  // namespace psd

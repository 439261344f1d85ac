#include "psd/interval_set.hpp"

#include "psd/error.hpp"
#include "psd/format.hpp"

#include <algorithm>
#include <cmath>

namespace psd {

bool Interval::contains(double x) const {
    const bool left = lo_closed ? x >= lo : x > lo;
    const bool right = hi_closed ? x <= hi : x < hi;
    return left && right;
}

bool Interval::empty() const {
    if (lo > hi) return true;
    if (lo == hi) return !(lo_closed && hi_closed);
    return false;
}

IntervalSet::IntervalSet(std::vector<Interval> parts) : parts_(std::move(parts)) {
    for (const auto& p : parts_)
        if (std::isnan(p.lo) || std::isnan(p.hi)) throw InvalidInput("interval endpoint is NaN");
    normalize();
}

void IntervalSet::normalize() {
    std::vector<Interval> v;
    for (auto p : parts_) {
        if (std::isinf(p.lo)) p.lo_closed = false;
        if (std::isinf(p.hi)) p.hi_closed = false;
        if (!p.empty()) v.push_back(p);
    }
    std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) {
        if (a.lo != b.lo) return a.lo < b.lo;
        return a.lo_closed && !b.lo_closed;
    });
    std::vector<Interval> out;
    for (const auto& p : v) {
        if (!out.empty()) {
            Interval& q = out.back();
            const bool connected = p.lo < q.hi || (p.lo == q.hi && (q.hi_closed || p.lo_closed));
            if (connected) {
                if (p.hi > q.hi) {
                    q.hi = p.hi;
                    q.hi_closed = p.hi_closed;
                } else if (p.hi == q.hi) {
                    q.hi_closed = q.hi_closed || p.hi_closed;
                }
                continue;
            }
        }
        out.push_back(p);
    }
    parts_ = std::move(out);
}

IntervalSet IntervalSet::all() { return IntervalSet({Interval{}}); }
IntervalSet IntervalSet::point(double x) { return IntervalSet({Interval{x, x, true, true}}); }
IntervalSet IntervalSet::closed(double a, double b) { return IntervalSet({Interval{a, b, true, true}}); }
IntervalSet IntervalSet::open(double a, double b) { return IntervalSet({Interval{a, b, false, false}}); }
IntervalSet IntervalSet::closed_open(double a, double b) { return IntervalSet({Interval{a, b, true, false}}); }
IntervalSet IntervalSet::open_closed(double a, double b) { return IntervalSet({Interval{a, b, false, true}}); }
IntervalSet IntervalSet::at_most(double x) { return IntervalSet({Interval{-kInf, x, false, true}}); }
IntervalSet IntervalSet::below(double x) { return IntervalSet({Interval{-kInf, x, false, false}}); }
IntervalSet IntervalSet::at_least(double x) { return IntervalSet({Interval{x, kInf, true, false}}); }
IntervalSet IntervalSet::above(double x) { return IntervalSet({Interval{x, kInf, false, false}}); }

bool IntervalSet::contains(double x) const {
    return std::any_of(parts_.begin(), parts_.end(), [x](const Interval& p) { return p.contains(x); });
}

IntervalSet IntervalSet::unite(const IntervalSet& o) const {
    auto v = parts_;
    v.insert(v.end(), o.parts_.begin(), o.parts_.end());
    return IntervalSet(std::move(v));
}

IntervalSet IntervalSet::intersect(const IntervalSet& o) const {
    std::vector<Interval> v;
    for (const auto& a : parts_) {
        for (const auto& b : o.parts_) {
            Interval c;
            if (a.lo > b.lo) {
                c.lo = a.lo;
                c.lo_closed = a.lo_closed;
            } else if (b.lo > a.lo) {
                c.lo = b.lo;
                c.lo_closed = b.lo_closed;
            } else {
                c.lo = a.lo;
                c.lo_closed = a.lo_closed && b.lo_closed;
            }
            if (a.hi < b.hi) {
                c.hi = a.hi;
                c.hi_closed = a.hi_closed;
            } else if (b.hi < a.hi) {
                c.hi = b.hi;
                c.hi_closed = b.hi_closed;
            } else {
                c.hi = a.hi;
                c.hi_closed = a.hi_closed && b.hi_closed;
            }
            if (!c.empty()) v.push_back(c);
        }
    }
    return IntervalSet(std::move(v));
}

IntervalSet IntervalSet::complement() const {
    std::vector<Interval> v;
    double cursor = -kInf;
    bool cursor_closed = false;  // whether the gap's left end is included
    for (const auto& p : parts_) {
        if (!(std::isinf(p.lo) && p.lo < 0)) v.push_back(Interval{cursor, p.lo, cursor_closed, !p.lo_closed});
        cursor = p.hi;
        cursor_closed = !p.hi_closed;
    }
    if (!(std::isinf(cursor) && cursor > 0)) v.push_back(Interval{cursor, kInf, cursor_closed, false});
    return IntervalSet(std::move(v));
}

IntervalSet IntervalSet::minus(const IntervalSet& o) const { return intersect(o.complement()); }

IntervalSet IntervalSet::symmetric_difference(const IntervalSet& o) const { return minus(o).unite(o.minus(*this)); }

IntervalSet IntervalSet::scaled(double c) const {
    if (!(c > 0.0)) throw InvalidInput("IntervalSet::scaled needs a positive factor");
    auto v = parts_;
    for (auto& p : v) {
        p.lo *= c;
        p.hi *= c;
    }
    return IntervalSet(std::move(v));
}

IntervalSet IntervalSet::closure() const {
    auto v = parts_;
    for (auto& p : v) p.lo_closed = p.hi_closed = true;
    return IntervalSet(std::move(v));
}

IntervalSet IntervalSet::dilate_closure(double eta) const {
    if (!(eta >= 0.0)) throw InvalidInput("dilation radius must be >= 0");
    auto v = parts_;
    for (auto& p : v) {
        p.lo -= eta;
        p.hi += eta;
        p.lo_closed = p.hi_closed = true;
    }
    return IntervalSet(std::move(v));
}

IntervalSet IntervalSet::endpoint_shift(double eta) const {
    if (!(eta >= 0.0)) throw InvalidInput("shift radius must be >= 0");
    auto v = parts_;
    for (auto& p : v) {
        p.lo = p.lo_closed ? p.lo - eta : p.lo + eta;
        p.hi = p.hi_closed ? p.hi + eta : p.hi - eta;
        p.lo_closed = p.hi_closed = true;
    }
    return IntervalSet(std::move(v));
}

double IntervalSet::distance_to_closure(double x) const {
    double best = kInf;
    for (const auto& p : parts_) {
        if (x >= p.lo && x <= p.hi) return 0.0;
        best = std::min(best, x < p.lo ? p.lo - x : x - p.hi);
    }
    return best;
}

std::vector<double> IntervalSet::boundary_points() const {
    std::vector<double> b;
    for (const auto& p : parts_) {
        if (std::isfinite(p.lo)) b.push_back(p.lo);
        if (std::isfinite(p.hi) && p.hi != p.lo) b.push_back(p.hi);
    }
    return b;
}

std::string IntervalSet::to_string() const {
    if (parts_.empty()) return "{}";
    std::string s;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        const auto& p = parts_[i];
        if (i) s += " U ";
        s += p.lo_closed ? "[" : "(";
        s += format_double(p.lo) + ", " + format_double(p.hi);
        s += p.hi_closed ? "]" : ")";
    }
    return s;
}

}  // namespace psd

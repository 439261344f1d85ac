#pragma once

namespace psd {

// log(erfc(x)) without underflow for large positive x.
double log_erfc(double x);

// log(sum exp(v_i)) over a range, stable for very negative inputs.
template <class It>
double log_sum_exp(It first, It last);

}  // namespace psd

#include <algorithm>
#include <cmath>
#include <limits>

namespace psd {

template <class It>
double log_sum_exp(It first, It last) {
    if (first == last) return -std::numeric_limits<double>::infinity();
    const double mx = *std::max_element(first, last);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (It it = first; it != last; ++it) s += std::exp(*it - mx);
    return mx + std::log(s);
}

}  // namespace psd

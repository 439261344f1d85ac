#include "psd/special.hpp"

#include <cmath>

namespace psd {

double log_erfc(double x) {
    if (x < 20.0) return std::log(std::erfc(x));
    // Asymptotic series erfc(x) ~ exp(-x^2)/(x sqrt(pi)) * sum (-1)^k (2k-1)!! / (2x^2)^k.
    const double inv = 1.0 / (2.0 * x * x);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 12; ++k) {
        term *= -(2.0 * k - 1.0) * inv;
        sum += term;
    }
    return -x * x - std::log(x) - 0.5 * std::log(M_PI) + std::log(sum);
}

}  // namespace psd

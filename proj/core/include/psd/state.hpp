#pragma once

#include <Eigen/Dense>

#include <complex>
#include <concepts>
#include <functional>

namespace psd {

using cplx = std::complex<double>;

// A state lives in some L2 space sampled on cells; cell_weight() is the
// quadrature weight (1 for the finite backend, dx for the grid backend).
template <class S>
concept HilbertState = requires(const S& s, Eigen::VectorXcd v) {
    { s.coefficients() } -> std::convertible_to<const Eigen::VectorXcd&>;
    { s.cell_weight() } -> std::convertible_to<double>;
    { s.with_coefficients(std::move(v)) } -> std::same_as<S>;
    { s.compatible(s) } -> std::convertible_to<bool>;
};

template <HilbertState S>
cplx inner(const S& a, const S& b) {
    return a.cell_weight() * a.coefficients().dot(b.coefficients());
}

template <HilbertState S>
double norm2(const S& s) {
    return s.cell_weight() * s.coefficients().squaredNorm();
}

template <HilbertState S>
double norm(const S& s) {
    return std::sqrt(norm2(s));
}

template <HilbertState S>
S add(const S& a, const S& b) {
    return a.with_coefficients(a.coefficients() + b.coefficients());
}

template <HilbertState S>
S subtract(const S& a, const S& b) {
    return a.with_coefficients(a.coefficients() - b.coefficients());
}

template <HilbertState S>
S scale(const S& a, cplx c) {
    return a.with_coefficients(a.coefficients() * c);
}

template <HilbertState S>
S zero_like(const S& a) {
    return a.with_coefficients(Eigen::VectorXcd::Zero(a.coefficients().size()));
}

// U(t) acting on a state; t may be negative.
template <class S>
using Propagator = std::function<S(const S&, double)>;

}  // namespace psd

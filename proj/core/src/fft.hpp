#pragma once

#include <Eigen/Dense>

namespace psd::detail {

// In-place unnormalized DFTs: forward uses exp(-2 pi i jk/n), inverse exp(+...).
void fft_forward(Eigen::VectorXcd& v);
void fft_inverse(Eigen::VectorXcd& v);

}  // namespace psd::detail

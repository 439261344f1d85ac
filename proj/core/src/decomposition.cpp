#include "psd/decomposition.hpp"

namespace psd::detail {

double column_conditioning(const Eigen::MatrixXcd& columns) {
    if (columns.cols() == 0) return 0.0;
    if (columns.cols() > columns.rows()) return 0.0;
    // QR first so the SVD only sees an n x n factor even for long grid vectors.
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(columns);
    const Eigen::Index n = columns.cols();
    Eigen::MatrixXcd R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(R);
    const auto& s = svd.singularValues();
    const double smax = s.maxCoeff();
    if (!(smax > 0.0)) return 0.0;
    return s.minCoeff() / smax;
}

Eigen::VectorXcd solve_in_span(const Eigen::MatrixXcd& columns, const Eigen::VectorXcd& target) {
    return columns.colPivHouseholderQr().solve(target);
}

}  // namespace psd::detail

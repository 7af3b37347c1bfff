#include "hik/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace hik {

RowId row_id(const Matrix& y, double rel_tol, double abs_tol) {
    RowId out;
    const Index m = y.rows();
    if (m == 0 || y.cols() == 0) {
        out.interp.resize(m, 0);
        return out;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(y.transpose());
    const Matrix& r = qr.matrixQR();
    const Index kmax = std::min(r.rows(), r.cols());
    const double r00 = std::abs(r(0, 0));
    const double thresh = std::max(rel_tol * r00, abs_tol);
    Index k = 0;
    while (k < kmax && std::abs(r(k, k)) > thresh && r(k, k) != 0.0)
        ++k;

    const auto& perm = qr.colsPermutation().indices();
    out.skeleton.resize(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i)
        out.skeleton[static_cast<std::size_t>(i)] = perm(i);

    out.interp = Matrix::Zero(m, k);
    if (k == 0)
        return out;
    // Y^T P = Q [R11 R12]  =>  Y ~= P [I ; (R11^-1 R12)^T] Y(skeleton, :)
    const Matrix t = r.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(r.block(0, k, k, m - k));
    for (Index i = 0; i < k; ++i)
        out.interp(perm(i), i) = 1.0;
    for (Index j = k; j < m; ++j)
        out.interp.row(perm(j)) = t.col(j - k).transpose();
    return out;
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
}

double rel_frobenius(const Matrix& a, const Matrix& b) {
    const double nb = b.norm();
    const double diff = (a - b).norm();
    return nb > 0.0 ? diff / nb : diff;
}

} // namespace hik

#include "hik/kernel.hpp"

#include <algorithm>
#include <stdexcept>

#include "hik/parallel.hpp"

namespace hik {

namespace {
constexpr Index kRowBlock = 128;
constexpr Index kColBlock = 2048;
} // namespace

void KernelConfig::validate() const {
    if (!(h > 0.0))
        throw std::invalid_argument("kernel width h must be positive");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("lambda must be non-negative");
}

double gauss_entry(std::span<const double> a, std::span<const double> b, double h) {
    if (a.size() != b.size())
        throw std::invalid_argument("gauss_entry: dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double t = a[k] - b[k];
        s += t * t;
    }
    return std::exp(-0.5 * s / (h * h));
}

Matrix kernel_block(const PointMatrix& a, IndexRange rows, const PointMatrix& b, IndexRange cols, double h) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("kernel_block: dimension mismatch");
    Matrix out(rows.size(), cols.size());
    const double scale = -0.5 / (h * h);
    const Index d = a.cols();
    for (Index j = 0; j < cols.size(); ++j) {
        const double* y = b.row(cols.begin + j).data();
        for (Index i = 0; i < rows.size(); ++i) {
            const double* x = a.row(rows.begin + i).data();
            double s = 0.0;
            for (Index k = 0; k < d; ++k) {
                const double t = x[k] - y[k];
                s += t * t;
            }
            out(i, j) = std::exp(scale * s);
        }
    }
    return out;
}

Matrix kernel_block(const PointMatrix& p, std::span<const Index> rows, std::span<const Index> cols, double h) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i)
            out(static_cast<Index>(i), static_cast<Index>(j)) = gauss_entry(p, rows[i], p, cols[j], h);
    return out;
}

Matrix assemble_block(const PointMatrix& p, IndexRange rows, IndexRange cols, const KernelConfig& cfg, bool shift) {
    if (rows.begin < 0 || cols.begin < 0 || rows.end > p.rows() || cols.end > p.rows())
        throw std::out_of_range("assemble_block: range outside [0, n)");
    Matrix k = kernel_block(p, rows, p, cols, cfg.h);
    if (shift && rows == cols)
        k.diagonal().array() += cfg.lambda;
    return k;
}

Matrix dense_matvec(const PointMatrix& p, const KernelConfig& cfg, const Matrix& x) {
    const Index n = p.rows();
    if (x.rows() != n)
        throw std::invalid_argument("dense_matvec: X must have n rows");
    Matrix y = Matrix::Zero(n, x.cols());
    parallel_for(0, n, kRowBlock, [&](Index b, Index e) {
        for (Index c = 0; c < n; c += kColBlock) {
            const Index ce = std::min(n, c + kColBlock);
            const Matrix kb = kernel_block(p, {b, e}, p, {c, ce}, cfg.h);
            y.middleRows(b, e - b).noalias() += kb * x.middleRows(c, ce - c);
        }
    });
    if (cfg.lambda != 0.0)
        y += cfg.lambda * x;
    return y;
}

Vector singular_values(const Matrix& block) {
    if (block.size() == 0)
        throw std::invalid_argument("singular_values: empty block");
    Eigen::BDCSVD<Matrix> svd(block);
    if (svd.info() != Eigen::Success)
        throw std::runtime_error("SVD did not converge");
    return svd.singularValues();
}

Index effective_rank(const Matrix& block, double threshold) {
    if (!(threshold > 0.0))
        throw std::invalid_argument("effective_rank: threshold must be positive");
    const Vector s = singular_values(block);
    return static_cast<Index>((s.array() > threshold).count());
}

} // namespace hik

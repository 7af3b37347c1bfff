#pragma once

#include <cmath>
#include <span>

#include "hik/types.hpp"

namespace hik {

struct KernelConfig {
    double h = 1.0;      ///< Gaussian width, in the units of the (normalized) coordinates
    double lambda = 0.0; ///< ridge regularization added to the diagonal

    /// Throws std::invalid_argument unless h > 0 and lambda >= 0.
    void validate() const;
};

/// exp(-|a-b|^2 / (2 h^2)). The squared distance is summed directly, never via
/// |a|^2 - 2 a.b + |b|^2.
double gauss_entry(std::span<const double> a, std::span<const double> b, double h);

inline double gauss_entry(const PointMatrix& p, Index i, const PointMatrix& q, Index j, double h) {
    const double* a = p.row(i).data();
    const double* b = q.row(j).data();
    const Index d = p.cols();
    double s = 0.0;
    for (Index k = 0; k < d; ++k) {
        const double t = a[k] - b[k];
        s += t * t;
    }
    return std::exp(-0.5 * s / (h * h));
}

/// Kernel block between rows of `a` and rows of `b`.
Matrix kernel_block(const PointMatrix& a, IndexRange rows, const PointMatrix& b, IndexRange cols, double h);

/// Kernel block for arbitrary row and column index lists of one point set.
Matrix kernel_block(const PointMatrix& p, std::span<const Index> rows, std::span<const Index> cols, double h);

/// K(rows, cols), plus lambda on the diagonal when `shift` is set and rows == cols.
Matrix assemble_block(const PointMatrix& p, IndexRange rows, IndexRange cols, const KernelConfig& cfg,
                      bool shift = false);

/// (K + lambda I) X, evaluated in row blocks without storing K.
Matrix dense_matvec(const PointMatrix& p, const KernelConfig& cfg, const Matrix& x);

/// Number of singular values of `block` strictly greater than `threshold`.
Index effective_rank(const Matrix& block, double threshold = 0.01);

/// All singular values, descending.
Vector singular_values(const Matrix& block);

} // namespace hik

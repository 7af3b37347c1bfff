#pragma once

#include <vector>

#include "hik/types.hpp"

namespace hik {

/// Row interpolative decomposition Y ~= X * Y(skeleton, :), with X(skeleton, :) = I.
struct RowId {
    Matrix interp;               ///< rows(Y) x rank
    std::vector<Index> skeleton; ///< selected rows of Y, in pivot order
    Index rank() const { return static_cast<Index>(skeleton.size()); }
};

/// Column-pivoted QR on Y^T. The rank is the number of pivots |R_ii| larger than
/// max(rel_tol * |R_00|, abs_tol).
RowId row_id(const Matrix& y, double rel_tol, double abs_tol);

/// Select rows of a matrix by index.
Matrix take_rows(const Matrix& m, const std::vector<Index>& rows);

/// Relative Frobenius distance |a - b|_F / |b|_F (absolute when b is zero).
double rel_frobenius(const Matrix& a, const Matrix& b);

} // namespace hik

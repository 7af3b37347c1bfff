#pragma once

#include <cstdint>
#include <vector>

#include "hik/cluster.hpp"
#include "hik/data.hpp"
#include "hik/hss.hpp"
#include "hik/types.hpp"

namespace hik::testing {

/// Gaussian kernel matrix by straightforward double loops.
Matrix oracle_kernel(const PointMatrix& a, const PointMatrix& b, double h);
inline Matrix oracle_kernel(const PointMatrix& p, double h) { return oracle_kernel(p, p, h); }

/// Singular values via one-sided Jacobi.
Vector oracle_singular_values(const Matrix& a);
Index oracle_rank(const Matrix& a, double threshold);

/// Full-pivot LU solve of (a + lambda I) x = b.
Matrix oracle_solve(const Matrix& a, double lambda, const Matrix& b);

/// Dense HSS expansion by direct recursion over nested bases (independent of matvec).
Matrix oracle_hss_dense(const HssMatrix& hm);

double rel_err(const Matrix& a, const Matrix& b);

/// Largest absolute entry; 0 for an empty matrix.
double max_abs(const Matrix& a);

/// Gaussian blobs with given centres, `per` points each, unit-free sigma.
DataMatrix blobs_at(const std::vector<std::vector<double>>& centres, Index per, double sigma, std::uint64_t seed);

/// Clustered 2-D data: `clusters` blobs, labels +-1 by cluster parity.
DataMatrix blob_benchmark(Index n, std::uint64_t seed, int clusters = 8);

/// Checks every tree invariant by traversal; returns an empty string when they all hold.
std::string tree_violation(const ClusterTree& tree);

} // namespace hik::testing

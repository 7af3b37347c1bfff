#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "hik/cluster.hpp"
#include "hik/kernel.hpp"
#include "hik/types.hpp"

namespace hik {

/// block ~= left * right^T
struct LowRankBlock {
    Matrix left;  ///< m x r
    Matrix right; ///< n x r

    Index rank() const { return left.cols(); }
    Matrix dense() const { return left * right.transpose(); }
};

struct AcaResult {
    LowRankBlock block;
    bool converged = true; ///< false when max_rank was hit before the tolerance
    Index entries_evaluated = 0;
};

using EntryFn = std::function<double(Index, Index)>;

/// Partially pivoted adaptive cross approximation of an m x n block given entry access.
/// Stops once |u_k| |v_k| <= tol * |S_k|_F (running Frobenius estimate of the
/// approximant) or at max_rank.
AcaResult aca_compress(const EntryFn& entry, Index m, Index n, double tol, Index max_rank);

struct BlockEntry {
    IndexRange rows;
    IndexRange cols;
    std::variant<Matrix, LowRankBlock> data;

    bool is_low_rank() const { return std::holds_alternative<LowRankBlock>(data); }
};

struct HMatrixOptions {
    double eta = 2.0;
    double tol = 1e-6;
    /// Nodes with at most this many points are treated as leaves.
    Index leaf_size = 64;
    /// 0 selects min(m, n) / 2 per block.
    Index max_rank = 0;
};

/// Strongly admissible hierarchical matrix of the Gaussian kernel over a cluster
/// tree built on the same, already permuted, points.
class HMatrix {
public:
    Index n() const { return n_; }
    const std::vector<BlockEntry>& blocks() const { return blocks_; }
    double eta() const { return opts_.eta; }
    double tol() const { return opts_.tol; }
    /// Admissible blocks where ACA did not converge and dense storage was used.
    Index aca_fallbacks() const { return aca_fallbacks_; }
    Index low_rank_count() const;
    Index dense_count() const;
    Index max_rank() const;

    /// (K + lambda I_dense-diagonal) X. Lambda is only applied inside dense diagonal blocks.
    Matrix matvec(const Matrix& x) const;
    /// Same operator with every block transposed.
    Matrix matvec_transpose(const Matrix& x) const;
    Matrix to_dense() const;

    friend HMatrix build_hmatrix(const PointMatrix&, const ClusterTree&, const KernelConfig&, const HMatrixOptions&);

private:
    Index n_ = 0;
    HMatrixOptions opts_;
    std::vector<BlockEntry> blocks_;
    Index aca_fallbacks_ = 0;
};

/// Axis-aligned bounding box of a set of points.
struct BoundingBox {
    Vector lo;
    Vector hi;
    double diameter() const;
    double distance(const BoundingBox& other) const;
};

BoundingBox bounding_box(const PointMatrix& p, IndexRange range);

/// min(diam(s), diam(t)) <= eta * dist(s, t), with eta > 0 and a positive distance.
bool is_admissible(const BoundingBox& s, const BoundingBox& t, double eta);

/// `points` must already be in tree order (apply_permutation).
HMatrix build_hmatrix(const PointMatrix& points, const ClusterTree& tree, const KernelConfig& cfg,
                      const HMatrixOptions& opts = {});

/// Total stored entries times the entry width: dense m*n, low-rank (m+n)*r.
std::size_t h_memory(const HMatrix& hm);

} // namespace hik

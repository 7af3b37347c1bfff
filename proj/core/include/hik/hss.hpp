#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hik/cluster.hpp"
#include "hik/hmat.hpp"
#include "hik/kernel.hpp"
#include "hik/types.hpp"

namespace hik {

/// Partially matrix-free access to an unshifted kernel matrix: products with blocks
/// of vectors plus individual entries. Indices are in tree order.
class Sampler {
public:
    virtual ~Sampler() = default;

    virtual Index n() const = 0;
    /// K X
    virtual Matrix apply(const Matrix& x) const = 0;
    /// K^T X
    virtual Matrix apply_transpose(const Matrix& x) const = 0;
    virtual double element(Index i, Index j) const = 0;
    /// When true, compression reuses the K X samples for the K^T side.
    virtual bool symmetric() const { return true; }

    Matrix elements(const std::vector<Index>& rows, const std::vector<Index>& cols) const;
    Matrix elements(IndexRange rows, IndexRange cols) const;
};

/// Samples by blocked dense evaluation of the Gaussian kernel, O(n^2) per product.
class DenseKernelSampler final : public Sampler {
public:
    DenseKernelSampler(const PointMatrix& points, double h);

    Index n() const override { return points_->rows(); }
    Matrix apply(const Matrix& x) const override;
    Matrix apply_transpose(const Matrix& x) const override { return apply(x); }
    double element(Index i, Index j) const override;

private:
    const PointMatrix* points_;
    double h_;
};

/// Samples through an H-matrix approximation of K; entries come from the exact kernel.
class HMatrixSampler final : public Sampler {
public:
    HMatrixSampler(const PointMatrix& points, double h, std::shared_ptr<const HMatrix> hm);

    Index n() const override { return points_->rows(); }
    Matrix apply(const Matrix& x) const override;
    Matrix apply_transpose(const Matrix& x) const override;
    double element(Index i, Index j) const override;

    const HMatrix& hmatrix() const { return *hm_; }

private:
    const PointMatrix* points_;
    double h_;
    std::shared_ptr<const HMatrix> hm_;
};

/// Wraps a dense matrix. Test utility and general-matrix entry point.
class MatrixSampler final : public Sampler {
public:
    explicit MatrixSampler(Matrix a, bool symmetric);

    Index n() const override { return a_.rows(); }
    Matrix apply(const Matrix& x) const override { return a_ * x; }
    Matrix apply_transpose(const Matrix& x) const override { return a_.transpose() * x; }
    double element(Index i, Index j) const override { return a_(i, j); }
    bool symmetric() const override { return symmetric_; }

private:
    Matrix a_;
    bool symmetric_;
};

/// Storage of one tree node.
///
/// Leaves hold D (dense diagonal block) and the explicit bases U, V. Non-root
/// internal nodes hold the transfer matrices Utilde, Vtilde so that
/// U_node = blockdiag(U_left, U_right) * Utilde. Internal nodes hold the couplings
/// B_lr, B_rl with K(left, right) ~= U_left B_lr V_right^T.
struct HssNode {
    Matrix D;
    Matrix U;
    Matrix V;
    Matrix Utilde;
    Matrix Vtilde;
    Matrix B_lr;
    Matrix B_rl;
    std::vector<Index> row_skeleton;
    std::vector<Index> col_skeleton;

    /// Number of columns of this node's row basis (0 at the root).
    Index rank() const;
};

struct HssOptions {
    double tol = 1e-2;      ///< relative ID threshold per node
    double abs_tol = -1.0;  ///< absolute ID floor; negative derives it from tol and the sample scale
    Index d0 = 128;         ///< initial number of random samples
    Index dstep = 64;       ///< samples added per adaptive round
    Index oversampling = 10;
    std::uint64_t seed = 1;
};

struct HssTimings {
    double sample_s = 0.0;  ///< time inside Sampler::apply / apply_transpose
    double other_s = 0.0;   ///< everything else in compression
    Index sample_columns = 0;
    Index rounds = 0;
};

class HssMatrix {
public:
    Index n() const { return tree_.n(); }
    const ClusterTree& tree() const { return tree_; }
    const HssNode& node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<HssNode>& nodes() const { return nodes_; }
    double tol() const { return tol_; }
    Index max_rank_observed() const { return max_rank_; }
    const HssTimings& timings() const { return timings_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// K_HSS X (no diagonal shift).
    Matrix matvec(const Matrix& x) const;
    Matrix to_dense() const;
    /// Explicit U basis of a node, expanded through its descendants' transfer matrices.
    Matrix expanded_row_basis(Index node) const;
    Matrix expanded_col_basis(Index node) const;

    friend HssMatrix hss_compress(const Sampler&, const ClusterTree&, const HssOptions&);

private:
    ClusterTree tree_;
    std::vector<HssNode> nodes_;
    double tol_ = 0.0;
    Index max_rank_ = 0;
    HssTimings timings_;
    std::vector<std::string> warnings_;
};

/// Randomized bottom-up compression driven by sampler products and entries.
/// Samples grow by dstep whenever some node's detected rank comes within
/// `oversampling` of the sample count.
HssMatrix hss_compress(const Sampler& sampler, const ClusterTree& tree, const HssOptions& opts = {});

inline Matrix hss_matvec(const HssMatrix& hm, const Matrix& x) { return hm.matvec(x); }

struct HssStats {
    std::size_t memory_bytes = 0;
    Index max_rank = 0;
    Index leaf_count = 0;
    Index level_count = 0;

    double memory_mb() const { return static_cast<double>(memory_bytes) / 1.0e6; }
};

/// Memory counts D, U, V, Utilde, Vtilde, B_lr and B_rl entries at 8 bytes each.
HssStats hss_stats(const HssMatrix& hm);

} // namespace hik

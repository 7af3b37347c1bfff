#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hik/data.hpp"
#include "hik/types.hpp"

namespace hik {

enum class ClusterTag { Natural, KdTree, Pca, TwoMeans };

struct ClusterMethod {
    ClusterTag tag = ClusterTag::TwoMeans;
    std::uint64_t seed = 0; ///< only used by TwoMeans
};

std::string to_string(ClusterTag tag);
/// Accepts the CLI spellings np, kd, pca, 2mn (case-insensitive).
ClusterTag parse_cluster_tag(const std::string& name);

struct ClusterNode {
    IndexRange range;
    Index left = -1;
    Index right = -1;

    bool is_leaf() const { return left < 0; }
};

/// Binary tree of contiguous index ranges over the permuted points.
///
/// Node 0 is the root and covers [0, n). Children are created in pre-order, so a
/// node's index is always smaller than its children's. perm[i] is the original
/// row of the point that sits at position i after reordering.
class ClusterTree {
public:
    ClusterTree() = default;
    ClusterTree(std::vector<ClusterNode> nodes, std::vector<Index> perm, Index leaf_size);

    Index n() const { return static_cast<Index>(perm_.size()); }
    Index leaf_size() const { return leaf_size_; }
    Index size() const { return static_cast<Index>(nodes_.size()); }
    const ClusterNode& node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<ClusterNode>& nodes() const { return nodes_; }
    const std::vector<Index>& perm() const { return perm_; }
    std::vector<Index> inverse_perm() const;

    Index root() const { return 0; }
    /// Children before parents.
    const std::vector<Index>& postorder() const { return postorder_; }
    std::vector<Index> leaves() const;
    /// Root is level 0.
    Index depth() const;
    Index level_count() const { return depth() + 1; }

    /// Throws std::logic_error describing the first broken invariant.
    void check_invariants() const;

private:
    std::vector<ClusterNode> nodes_;
    std::vector<Index> perm_;
    Index leaf_size_ = 16;
    std::vector<Index> postorder_;
};

/// Recursively bisects the points until every range holds at most leaf_size points.
ClusterTree build_tree(const DataMatrix& data, ClusterMethod method, Index leaf_size = 16);

/// Result of one bisection: positions (into the caller's index list) that go left.
/// `left` and `right` together hold every input position exactly once.
struct Bisection {
    std::vector<Index> left;
    std::vector<Index> right;
};

/// Ceil split of a range: the extra point of an odd range goes left.
std::pair<IndexRange, IndexRange> split_natural(IndexRange range);

/// The split functions operate on the rows `idx` of `points` and return positions
/// into `idx`. All of them guarantee two non-empty halves when idx.size() >= 2.
Bisection split_kd(const PointMatrix& points, std::span<const Index> idx);
Bisection split_pca(const PointMatrix& points, std::span<const Index> idx);
Bisection split_two_means(const PointMatrix& points, std::span<const Index> idx, std::uint64_t seed);

/// First principal direction of the rows idx (unit length, first nonzero entry
/// positive). Empty when the points have zero covariance.
Vector principal_direction(const PointMatrix& points, std::span<const Index> idx);

/// Row i of the result is row perm[i] of the input; labels follow.
DataMatrix apply_permutation(const DataMatrix& data, std::span<const Index> perm);
DataMatrix apply_permutation(const DataMatrix& data, const ClusterTree& tree);

} // namespace hik

#include "hik/cluster.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

namespace hik {

namespace {

constexpr int kLloydIterations = 100;
constexpr int kPowerIterations = 100;
constexpr double kPowerTol = 1e-8;
constexpr Index kImbalanceFactor = 100;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Bisection natural_positions(Index m) {
    Bisection out;
    const Index cut = (m + 1) / 2;
    for (Index p = 0; p < m; ++p)
        (p < cut ? out.left : out.right).push_back(p);
    return out;
}

bool unbalanced(std::size_t a, std::size_t b) {
    const auto lo = static_cast<Index>(std::min(a, b));
    const auto hi = static_cast<Index>(std::max(a, b));
    return lo == 0 || kImbalanceFactor * lo < hi;
}

/// Lower ceil(m/2) values go left; ties are broken by position so the result is deterministic.
Bisection median_split(const std::vector<double>& values) {
    const auto m = static_cast<Index>(values.size());
    std::vector<Index> order(values.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)];
    });
    const Index cut = (m + 1) / 2;
    Bisection out;
    out.left.assign(order.begin(), order.begin() + cut);
    out.right.assign(order.begin() + cut, order.end());
    std::sort(out.left.begin(), out.left.end());
    std::sort(out.right.begin(), out.right.end());
    return out;
}

/// Split at the mean value (ties go right), falling back to the median when the
/// halves are too unbalanced.
Bisection mean_split(const std::vector<double>& values) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    Bisection out;
    for (std::size_t p = 0; p < values.size(); ++p)
        (values[p] < mean ? out.left : out.right).push_back(static_cast<Index>(p));
    if (unbalanced(out.left.size(), out.right.size()))
        return median_split(values);
    return out;
}

double sqdist(const PointMatrix& pts, Index i, const Vector& c) {
    return (pts.row(i).transpose() - c).squaredNorm();
}

} // namespace

std::string to_string(ClusterTag tag) {
    switch (tag) {
    case ClusterTag::Natural: return "np";
    case ClusterTag::KdTree: return "kd";
    case ClusterTag::Pca: return "pca";
    case ClusterTag::TwoMeans: return "2mn";
    }
    return "?";
}

ClusterTag parse_cluster_tag(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "np" || s == "natural")
        return ClusterTag::Natural;
    if (s == "kd")
        return ClusterTag::KdTree;
    if (s == "pca")
        return ClusterTag::Pca;
    if (s == "2mn" || s == "twomeans")
        return ClusterTag::TwoMeans;
    throw std::invalid_argument("unknown clustering method '" + name + "'");
}

ClusterTree::ClusterTree(std::vector<ClusterNode> nodes, std::vector<Index> perm, Index leaf_size)
    : nodes_(std::move(nodes)), perm_(std::move(perm)), leaf_size_(leaf_size) {
    if (nodes_.empty())
        return;
    // Iterative post-order from the root.
    std::vector<std::pair<Index, bool>> stack{{0, false}};
    while (!stack.empty()) {
        auto [i, expanded] = stack.back();
        stack.pop_back();
        const auto& nd = node(i);
        if (expanded || nd.is_leaf()) {
            postorder_.push_back(i);
            continue;
        }
        stack.push_back({i, true});
        stack.push_back({nd.right, false});
        stack.push_back({nd.left, false});
    }
}

std::vector<Index> ClusterTree::inverse_perm() const {
    std::vector<Index> inv(perm_.size());
    for (std::size_t i = 0; i < perm_.size(); ++i)
        inv[static_cast<std::size_t>(perm_[i])] = static_cast<Index>(i);
    return inv;
}

std::vector<Index> ClusterTree::leaves() const {
    std::vector<Index> out;
    for (Index i : postorder_)
        if (node(i).is_leaf())
            out.push_back(i);
    return out;
}

Index ClusterTree::depth() const {
    if (nodes_.empty())
        return 0;
    std::vector<Index> level(nodes_.size(), 0);
    Index deepest = 0;
    for (Index i = 0; i < size(); ++i) {
        const auto& nd = node(i);
        if (!nd.is_leaf()) {
            level[static_cast<std::size_t>(nd.left)] = level[static_cast<std::size_t>(i)] + 1;
            level[static_cast<std::size_t>(nd.right)] = level[static_cast<std::size_t>(i)] + 1;
        }
        deepest = std::max(deepest, level[static_cast<std::size_t>(i)]);
    }
    return deepest;
}

void ClusterTree::check_invariants() const {
    const Index nn = n();
    if (nodes_.empty())
        throw std::logic_error("empty tree");
    if (node(0).range != IndexRange{0, nn})
        throw std::logic_error("root range is not [0, n)");
    std::vector<char> seen(static_cast<std::size_t>(nn), 0);
    for (Index p : perm_) {
        if (p < 0 || p >= nn || seen[static_cast<std::size_t>(p)])
            throw std::logic_error("perm is not a bijection");
        seen[static_cast<std::size_t>(p)] = 1;
    }
    Index covered = 0;
    for (Index i = 0; i < size(); ++i) {
        const auto& nd = node(i);
        if (nd.range.size() < 1)
            throw std::logic_error("empty node range");
        if (nd.is_leaf()) {
            if (nd.range.size() > leaf_size_)
                throw std::logic_error("leaf larger than leaf_size");
            continue;
        }
        if (nd.right < 0 || nd.left <= i || nd.right <= i)
            throw std::logic_error("bad child indices");
        const auto& l = node(nd.left).range;
        const auto& r = node(nd.right).range;
        if (l.begin != nd.range.begin || l.end != r.begin || r.end != nd.range.end)
            throw std::logic_error("children do not partition the parent range");
        if (nd.range.size() <= leaf_size_)
            throw std::logic_error("node split although it fits in a leaf");
    }
    for (Index leaf : leaves()) {
        if (node(leaf).range.begin != covered)
            throw std::logic_error("leaves leave a gap");
        covered = node(leaf).range.end;
    }
    if (covered != nn)
        throw std::logic_error("leaves do not cover [0, n)");
}

std::pair<IndexRange, IndexRange> split_natural(IndexRange range) {
    const Index mid = range.begin + (range.size() + 1) / 2;
    return {{range.begin, mid}, {mid, range.end}};
}

Bisection split_kd(const PointMatrix& points, std::span<const Index> idx) {
    const auto m = static_cast<Index>(idx.size());
    if (m < 2)
        throw std::invalid_argument("split_kd needs at least two points");
    Index dim = -1;
    double best = 0.0;
    for (Index j = 0; j < points.cols(); ++j) {
        double lo = points(idx[0], j), hi = lo;
        for (Index p = 1; p < m; ++p) {
            lo = std::min(lo, points(idx[p], j));
            hi = std::max(hi, points(idx[p], j));
        }
        if (hi - lo > best) {
            best = hi - lo;
            dim = j;
        }
    }
    if (dim < 0)
        return natural_positions(m);
    std::vector<double> values(static_cast<std::size_t>(m));
    for (Index p = 0; p < m; ++p)
        values[static_cast<std::size_t>(p)] = points(idx[p], dim);
    return mean_split(values);
}

Vector principal_direction(const PointMatrix& points, std::span<const Index> idx) {
    const auto m = static_cast<Index>(idx.size());
    const Index d = points.cols();
    Vector mean = Vector::Zero(d);
    for (Index p = 0; p < m; ++p)
        mean += points.row(idx[p]).transpose();
    mean /= static_cast<double>(m);
    Matrix cov = Matrix::Zero(d, d);
    for (Index p = 0; p < m; ++p) {
        const Vector c = points.row(idx[p]).transpose() - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(c);
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(m);
    if (cov.diagonal().maxCoeff() <= 0.0)
        return {};

    Vector v = cov * Vector::Ones(d);
    if (v.norm() <= 1e-12 * cov.diagonal().maxCoeff()) {
        Index j = 0;
        cov.diagonal().maxCoeff(&j);
        v = cov.col(j);
    }
    v.normalize();
    for (int it = 0; it < kPowerIterations; ++it) {
        Vector next = cov * v;
        const double nrm = next.norm();
        if (nrm == 0.0)
            return {};
        next /= nrm;
        const double change = (next - v).norm();
        v = next;
        if (change <= kPowerTol)
            break;
    }
    const double scale = v.cwiseAbs().maxCoeff();
    for (Index j = 0; j < d; ++j) {
        if (std::abs(v(j)) > 1e-12 * scale) {
            if (v(j) < 0)
                v = -v;
            break;
        }
    }
    return v;
}

Bisection split_pca(const PointMatrix& points, std::span<const Index> idx) {
    const auto m = static_cast<Index>(idx.size());
    if (m < 2)
        throw std::invalid_argument("split_pca needs at least two points");
    const Vector dir = principal_direction(points, idx);
    if (dir.size() == 0)
        return natural_positions(m);
    std::vector<double> values(static_cast<std::size_t>(m));
    for (Index p = 0; p < m; ++p)
        values[static_cast<std::size_t>(p)] = points.row(idx[p]).dot(dir.transpose());
    return mean_split(values);
}

Bisection split_two_means(const PointMatrix& points, std::span<const Index> idx, std::uint64_t seed) {
    const auto m = static_cast<Index>(idx.size());
    if (m < 2)
        throw std::invalid_argument("split_two_means needs at least two points");
    std::mt19937_64 rng(seed);
    const auto first = static_cast<Index>(std::uniform_int_distribution<Index>(0, m - 1)(rng));
    const Vector x0 = points.row(idx[first]).transpose();
    std::vector<double> dist(static_cast<std::size_t>(m));
    double total = 0.0;
    for (Index p = 0; p < m; ++p) {
        dist[static_cast<std::size_t>(p)] = std::sqrt(sqdist(points, idx[p], x0));
        total += dist[static_cast<std::size_t>(p)];
    }
    Index second = (first + 1) % m;
    if (total > 0.0)
        second = static_cast<Index>(std::discrete_distribution<Index>(dist.begin(), dist.end())(rng));

    std::array<Vector, 2> center{x0, points.row(idx[second]).transpose()};
    std::vector<int> assign(static_cast<std::size_t>(m), -1);
    for (int it = 0; it < kLloydIterations; ++it) {
        bool changed = false;
        std::array<Index, 2> count{0, 0};
        for (Index p = 0; p < m; ++p) {
            const int a = sqdist(points, idx[p], center[1]) < sqdist(points, idx[p], center[0]) ? 1 : 0;
            changed |= assign[static_cast<std::size_t>(p)] != a;
            assign[static_cast<std::size_t>(p)] = a;
            ++count[static_cast<std::size_t>(a)];
        }
        for (int empty = 0; empty < 2; ++empty) {
            if (count[static_cast<std::size_t>(empty)] != 0)
                continue;
            // Reseed the empty cluster with the point farthest from the other center.
            const Vector& other = center[static_cast<std::size_t>(1 - empty)];
            Index far = 0;
            double far_d = -1.0;
            for (Index p = 0; p < m; ++p) {
                const double dd = sqdist(points, idx[p], other);
                if (dd > far_d) {
                    far_d = dd;
                    far = p;
                }
            }
            assign[static_cast<std::size_t>(far)] = empty;
            changed = true;
        }
        for (int c = 0; c < 2; ++c) {
            Vector sum = Vector::Zero(points.cols());
            Index cnt = 0;
            for (Index p = 0; p < m; ++p)
                if (assign[static_cast<std::size_t>(p)] == c) {
                    sum += points.row(idx[p]).transpose();
                    ++cnt;
                }
            if (cnt > 0)
                center[static_cast<std::size_t>(c)] = sum / static_cast<double>(cnt);
        }
        if (!changed)
            break;
    }

    Bisection out;
    for (Index p = 0; p < m; ++p)
        (assign[static_cast<std::size_t>(p)] == 0 ? out.left : out.right).push_back(p);
    if (!unbalanced(out.left.size(), out.right.size()))
        return out;

    const Vector dir = center[1] - center[0];
    if (dir.norm() == 0.0)
        return out.left.empty() || out.right.empty() ? natural_positions(m) : out;
    std::vector<double> values(static_cast<std::size_t>(m));
    for (Index p = 0; p < m; ++p)
        values[static_cast<std::size_t>(p)] = points.row(idx[p]).dot(dir.transpose());
    return median_split(values);
}

ClusterTree build_tree(const DataMatrix& data, ClusterMethod method, Index leaf_size) {
    if (leaf_size < 1)
        throw std::invalid_argument("leaf_size must be at least 1");
    const Index n = data.n();
    if (n < 1)
        throw std::invalid_argument("build_tree needs at least one point");

    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::vector<ClusterNode> nodes;
    nodes.reserve(static_cast<std::size_t>(2 * (n / leaf_size + 1)));

    std::function<Index(IndexRange)> build = [&](IndexRange range) -> Index {
        const auto id = static_cast<Index>(nodes.size());
        nodes.push_back({range, -1, -1});
        if (range.size() <= leaf_size)
            return id;

        Index mid = 0;
        if (method.tag == ClusterTag::Natural) {
            mid = split_natural(range).first.end;
        } else {
            std::span<const Index> idx(perm.data() + range.begin, static_cast<std::size_t>(range.size()));
            Bisection bis;
            switch (method.tag) {
            case ClusterTag::KdTree: bis = split_kd(data.points, idx); break;
            case ClusterTag::Pca: bis = split_pca(data.points, idx); break;
            default: {
                const auto s = splitmix64(method.seed ^ splitmix64(static_cast<std::uint64_t>(range.begin) * 0x100000001b3ULL +
                                                                   static_cast<std::uint64_t>(range.end)));
                bis = split_two_means(data.points, idx, s);
            }
            }
            std::vector<Index> reordered;
            reordered.reserve(idx.size());
            for (Index p : bis.left)
                reordered.push_back(idx[static_cast<std::size_t>(p)]);
            for (Index p : bis.right)
                reordered.push_back(idx[static_cast<std::size_t>(p)]);
            std::copy(reordered.begin(), reordered.end(), perm.begin() + range.begin);
            mid = range.begin + static_cast<Index>(bis.left.size());
        }
        const Index l = build({range.begin, mid});
        const Index r = build({mid, range.end});
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    };
    build({0, n});
    return ClusterTree(std::move(nodes), std::move(perm), leaf_size);
}

DataMatrix apply_permutation(const DataMatrix& data, std::span<const Index> perm) {
    if (static_cast<Index>(perm.size()) != data.n())
        throw std::invalid_argument("permutation length does not match the data");
    return select_rows(data, perm);
}

DataMatrix apply_permutation(const DataMatrix& data, const ClusterTree& tree) {
    return apply_permutation(data, std::span<const Index>(tree.perm()));
}

} // namespace hik

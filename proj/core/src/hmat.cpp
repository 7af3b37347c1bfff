#include "hik/hmat.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hik {

namespace {
/// Consecutive all-zero residual rows tolerated before a block is declared exhausted.
constexpr Index kMaxZeroRows = 8;
} // namespace

AcaResult aca_compress(const EntryFn& entry, Index m, Index n, double tol, Index max_rank) {
    AcaResult res;
    res.block.left.resize(m, 0);
    res.block.right.resize(n, 0);
    if (m == 0 || n == 0)
        return res;
    max_rank = std::clamp<Index>(max_rank, 0, std::min(m, n));

    std::vector<Vector> us, vs;
    std::vector<char> row_used(static_cast<std::size_t>(m), 0), col_used(static_cast<std::size_t>(n), 0);
    double norm2 = 0.0;
    double pivot_scale = 0.0;
    Index pivot_row = 0;
    Index zero_rows = 0;
    bool converged = false;

    auto next_unused_row = [&]() -> Index {
        for (Index i = 0; i < m; ++i)
            if (!row_used[static_cast<std::size_t>(i)])
                return i;
        return -1;
    };

    while (static_cast<Index>(us.size()) < max_rank) {
        Vector row(n);
        for (Index j = 0; j < n; ++j)
            row(j) = entry(pivot_row, j);
        for (std::size_t l = 0; l < us.size(); ++l)
            row -= us[l](pivot_row) * vs[l];
        res.entries_evaluated += n;
        row_used[static_cast<std::size_t>(pivot_row)] = 1;

        Index pivot_col = -1;
        double best = 0.0;
        for (Index j = 0; j < n; ++j)
            if (!col_used[static_cast<std::size_t>(j)] && std::abs(row(j)) > best) {
                best = std::abs(row(j));
                pivot_col = j;
            }
        if (pivot_col >= 0 && best <= 64.0 * std::numeric_limits<double>::epsilon() * pivot_scale)
            pivot_col = -1;
        if (pivot_col < 0) {
            const Index next = next_unused_row();
            if (++zero_rows >= kMaxZeroRows || next < 0) {
                converged = true;
                break;
            }
            pivot_row = next;
            continue;
        }
        zero_rows = 0;
        pivot_scale = std::max(pivot_scale, best);

        Vector v = row / row(pivot_col);
        Vector u(m);
        for (Index i = 0; i < m; ++i)
            u(i) = entry(i, pivot_col);
        for (std::size_t l = 0; l < us.size(); ++l)
            u -= vs[l](pivot_col) * us[l];
        res.entries_evaluated += m;
        col_used[static_cast<std::size_t>(pivot_col)] = 1;

        double cross = 0.0;
        for (std::size_t l = 0; l < us.size(); ++l)
            cross += us[l].dot(u) * vs[l].dot(v);
        const double uv = u.norm() * v.norm();
        norm2 = std::max(0.0, norm2 + 2.0 * cross + uv * uv);
        us.push_back(std::move(u));
        vs.push_back(std::move(v));

        if (uv <= tol * std::sqrt(norm2)) {
            converged = true;
            break;
        }
        pivot_row = -1;
        best = -1.0;
        for (Index i = 0; i < m; ++i)
            if (!row_used[static_cast<std::size_t>(i)] && std::abs(us.back()(i)) > best) {
                best = std::abs(us.back()(i));
                pivot_row = i;
            }
        if (pivot_row < 0) {
            converged = true;
            break;
        }
    }
    if (static_cast<Index>(us.size()) == std::min(m, n))
        converged = true;

    const auto r = static_cast<Index>(us.size());
    res.block.left.resize(m, r);
    res.block.right.resize(n, r);
    for (Index l = 0; l < r; ++l) {
        res.block.left.col(l) = us[static_cast<std::size_t>(l)];
        res.block.right.col(l) = vs[static_cast<std::size_t>(l)];
    }
    res.converged = converged;
    return res;
}

double BoundingBox::diameter() const { return lo.size() ? (hi - lo).norm() : 0.0; }

double BoundingBox::distance(const BoundingBox& other) const {
    double s = 0.0;
    for (Index k = 0; k < lo.size(); ++k) {
        const double gap = std::max({0.0, other.lo(k) - hi(k), lo(k) - other.hi(k)});
        s += gap * gap;
    }
    return std::sqrt(s);
}

BoundingBox bounding_box(const PointMatrix& p, IndexRange range) {
    BoundingBox box;
    box.lo = p.middleRows(range.begin, range.size()).colwise().minCoeff().transpose();
    box.hi = p.middleRows(range.begin, range.size()).colwise().maxCoeff().transpose();
    return box;
}

bool is_admissible(const BoundingBox& s, const BoundingBox& t, double eta) {
    if (!(eta > 0.0))
        return false;
    const double dist = s.distance(t);
    return dist > 0.0 && std::min(s.diameter(), t.diameter()) <= eta * dist;
}

Index HMatrix::low_rank_count() const {
    return static_cast<Index>(std::count_if(blocks_.begin(), blocks_.end(), [](const auto& b) { return b.is_low_rank(); }));
}

Index HMatrix::dense_count() const { return static_cast<Index>(blocks_.size()) - low_rank_count(); }

Index HMatrix::max_rank() const {
    Index r = 0;
    for (const auto& b : blocks_)
        if (b.is_low_rank())
            r = std::max(r, std::get<LowRankBlock>(b.data).rank());
    return r;
}

Matrix HMatrix::matvec(const Matrix& x) const {
    if (x.rows() != n_)
        throw std::invalid_argument("h_matvec: X must have n rows");
    Matrix y = Matrix::Zero(n_, x.cols());
    for (const auto& b : blocks_) {
        const auto xs = x.middleRows(b.cols.begin, b.cols.size());
        auto ys = y.middleRows(b.rows.begin, b.rows.size());
        if (const auto* lr = std::get_if<LowRankBlock>(&b.data)) {
            const Matrix t = lr->right.transpose() * xs;
            ys.noalias() += lr->left * t;
        } else {
            ys.noalias() += std::get<Matrix>(b.data) * xs;
        }
    }
    return y;
}

Matrix HMatrix::matvec_transpose(const Matrix& x) const {
    if (x.rows() != n_)
        throw std::invalid_argument("h_matvec: X must have n rows");
    Matrix y = Matrix::Zero(n_, x.cols());
    for (const auto& b : blocks_) {
        const auto xs = x.middleRows(b.rows.begin, b.rows.size());
        auto ys = y.middleRows(b.cols.begin, b.cols.size());
        if (const auto* lr = std::get_if<LowRankBlock>(&b.data)) {
            const Matrix t = lr->left.transpose() * xs;
            ys.noalias() += lr->right * t;
        } else {
            ys.noalias() += std::get<Matrix>(b.data).transpose() * xs;
        }
    }
    return y;
}

Matrix HMatrix::to_dense() const {
    Matrix a = Matrix::Zero(n_, n_);
    for (const auto& b : blocks_) {
        auto blk = a.block(b.rows.begin, b.cols.begin, b.rows.size(), b.cols.size());
        if (const auto* lr = std::get_if<LowRankBlock>(&b.data))
            blk = lr->dense();
        else
            blk = std::get<Matrix>(b.data);
    }
    return a;
}

HMatrix build_hmatrix(const PointMatrix& points, const ClusterTree& tree, const KernelConfig& cfg,
                      const HMatrixOptions& opts) {
    cfg.validate();
    if (tree.n() != points.rows())
        throw std::invalid_argument("build_hmatrix: tree and points disagree on n");
    HMatrix hm;
    hm.n_ = points.rows();
    hm.opts_ = opts;

    std::vector<BoundingBox> boxes(static_cast<std::size_t>(tree.size()));
    for (Index i = 0; i < tree.size(); ++i)
        boxes[static_cast<std::size_t>(i)] = bounding_box(points, tree.node(i).range);

    auto is_leaf = [&](Index i) { return tree.node(i).is_leaf() || tree.node(i).range.size() <= opts.leaf_size; };

    auto dense_block = [&](IndexRange r, IndexRange c) {
        Matrix k = kernel_block(points, r, points, c, cfg.h);
        if (r == c)
            k.diagonal().array() += cfg.lambda;
        hm.blocks_.push_back({r, c, std::move(k)});
    };

    std::vector<std::pair<Index, Index>> work{{tree.root(), tree.root()}};
    while (!work.empty()) {
        auto [s, t] = work.back();
        work.pop_back();
        const IndexRange rs = tree.node(s).range;
        const IndexRange rt = tree.node(t).range;
        if (s != t && is_admissible(boxes[static_cast<std::size_t>(s)], boxes[static_cast<std::size_t>(t)], opts.eta)) {
            const Index mr = opts.max_rank > 0 ? opts.max_rank : std::max<Index>(1, std::min(rs.size(), rt.size()) / 2);
            auto res = aca_compress(
                [&](Index i, Index j) { return gauss_entry(points, rs.begin + i, points, rt.begin + j, cfg.h); },
                rs.size(), rt.size(), opts.tol, mr);
            if (res.converged) {
                hm.blocks_.push_back({rs, rt, std::move(res.block)});
            } else {
                ++hm.aca_fallbacks_;
                dense_block(rs, rt);
            }
            continue;
        }
        const bool ls = is_leaf(s), lt = is_leaf(t);
        if (ls && lt) {
            dense_block(rs, rt);
            continue;
        }
        const std::array<Index, 2> cs = ls ? std::array<Index, 2>{s, -1} : std::array<Index, 2>{tree.node(s).left, tree.node(s).right};
        const std::array<Index, 2> ct = lt ? std::array<Index, 2>{t, -1} : std::array<Index, 2>{tree.node(t).left, tree.node(t).right};
        for (Index a : cs)
            for (Index b : ct)
                if (a >= 0 && b >= 0)
                    work.push_back({a, b});
    }
    return hm;
}

std::size_t h_memory(const HMatrix& hm) {
    std::size_t entries = 0;
    for (const auto& b : hm.blocks()) {
        if (const auto* lr = std::get_if<LowRankBlock>(&b.data))
            entries += static_cast<std::size_t>((b.rows.size() + b.cols.size()) * lr->rank());
        else
            entries += static_cast<std::size_t>(b.rows.size() * b.cols.size());
    }
    return entries * kEntryBytes;
}

} // namespace hik

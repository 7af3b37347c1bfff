#include "hik/hss.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "hik/linalg.hpp"
#include "hik/timer.hpp"

namespace hik {

namespace {

/// Derived absolute ID floor, as a fraction of tol times the largest sample row norm.
/// Keeps nodes whose off-diagonal interaction is negligible on the global scale from
/// spending rank on noise.
constexpr double kAbsFloorFactor = 1e-2;

void fill_gaussian(Matrix& m, Index first_col, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (Index j = first_col; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            m(i, j) = g(rng);
}

struct NodeWork {
    Matrix y;  ///< row samples restricted to the row skeleton
    Matrix z;  ///< column samples restricted to the column skeleton
    Matrix om; ///< V^T Omega(I)
    Matrix ps; ///< U^T Psi(I)
};

struct PassResult {
    std::vector<HssNode> nodes;
    Index max_rank = 0;
    bool insufficient = false;
};

std::vector<Index> concat(const std::vector<Index>& a, const std::vector<Index>& b) {
    std::vector<Index> out(a);
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

std::vector<Index> pick(const std::vector<Index>& from, const std::vector<Index>& positions) {
    std::vector<Index> out;
    out.reserve(positions.size());
    for (Index p : positions)
        out.push_back(from[static_cast<std::size_t>(p)]);
    return out;
}

/// One bottom-up compression sweep over fixed samples S = K R (and Sc = K^T Rc).
PassResult compress_pass(const Sampler& sampler, const ClusterTree& tree, const Matrix& r, const Matrix& s,
                         const Matrix& rc, const Matrix& sc, bool symmetric, double rel_tol, double abs_tol,
                         Index oversampling) {
    const Index d = r.cols();
    const Index n = tree.n();
    PassResult out;
    out.nodes.resize(static_cast<std::size_t>(tree.size()));
    std::vector<NodeWork> work(static_cast<std::size_t>(tree.size()));

    auto note_rank = [&](Index k) {
        out.max_rank = std::max(out.max_rank, k);
        if (d < n && k > d - oversampling)
            out.insufficient = true;
    };

    for (Index id : tree.postorder()) {
        const auto& tn = tree.node(id);
        auto& hn = out.nodes[static_cast<std::size_t>(id)];
        auto& w = work[static_cast<std::size_t>(id)];
        const bool root = id == tree.root();

        Matrix yloc, zloc;
        std::vector<Index> rows_in, cols_in;
        if (tn.is_leaf()) {
            const IndexRange rg = tn.range;
            hn.D = sampler.elements(rg, rg);
            if (root)
                break;
            yloc = s.middleRows(rg.begin, rg.size()) - hn.D * r.middleRows(rg.begin, rg.size());
            if (!symmetric)
                zloc = sc.middleRows(rg.begin, rg.size()) - hn.D.transpose() * rc.middleRows(rg.begin, rg.size());
            rows_in.resize(static_cast<std::size_t>(rg.size()));
            for (Index i = 0; i < rg.size(); ++i)
                rows_in[static_cast<std::size_t>(i)] = rg.begin + i;
            cols_in = rows_in;
        } else {
            const auto& hl = out.nodes[static_cast<std::size_t>(tn.left)];
            const auto& hr = out.nodes[static_cast<std::size_t>(tn.right)];
            const auto& wl = work[static_cast<std::size_t>(tn.left)];
            const auto& wr = work[static_cast<std::size_t>(tn.right)];
            hn.B_lr = sampler.elements(hl.row_skeleton, hr.col_skeleton);
            hn.B_rl = sampler.elements(hr.row_skeleton, hl.col_skeleton);
            note_rank(hn.B_lr.rows());
            note_rank(hn.B_lr.cols());
            if (root)
                break;
            yloc.resize(wl.y.rows() + wr.y.rows(), d);
            yloc.topRows(wl.y.rows()) = wl.y - hn.B_lr * wr.om;
            yloc.bottomRows(wr.y.rows()) = wr.y - hn.B_rl * wl.om;
            if (!symmetric) {
                zloc.resize(wl.z.rows() + wr.z.rows(), d);
                zloc.topRows(wl.z.rows()) = wl.z - hn.B_rl.transpose() * wr.ps;
                zloc.bottomRows(wr.z.rows()) = wr.z - hn.B_lr.transpose() * wl.ps;
            }
            rows_in = concat(hl.row_skeleton, hr.row_skeleton);
            cols_in = concat(hl.col_skeleton, hr.col_skeleton);
        }

        const RowId rid = row_id(yloc, rel_tol, abs_tol);
        const RowId cid = symmetric ? rid : row_id(zloc, rel_tol, abs_tol);
        note_rank(rid.rank());
        note_rank(cid.rank());

        // Local Omega / Psi: the random rows of this node's index set seen through
        // the (nested) bases.
        Matrix om_loc, ps_loc;
        if (tn.is_leaf()) {
            om_loc = r.middleRows(tn.range.begin, tn.range.size());
            ps_loc = symmetric ? om_loc : Matrix(rc.middleRows(tn.range.begin, tn.range.size()));
        } else {
            const auto& wl = work[static_cast<std::size_t>(tn.left)];
            const auto& wr = work[static_cast<std::size_t>(tn.right)];
            om_loc.resize(wl.om.rows() + wr.om.rows(), d);
            om_loc << wl.om, wr.om;
            ps_loc.resize(wl.ps.rows() + wr.ps.rows(), d);
            ps_loc << wl.ps, wr.ps;
        }
        w.om = cid.interp.transpose() * om_loc;
        w.ps = rid.interp.transpose() * ps_loc;
        w.y = take_rows(yloc, rid.skeleton);
        w.z = symmetric ? w.y : take_rows(zloc, cid.skeleton);
        hn.row_skeleton = pick(rows_in, rid.skeleton);
        hn.col_skeleton = pick(cols_in, cid.skeleton);
        if (tn.is_leaf()) {
            hn.U = rid.interp;
            hn.V = cid.interp;
        } else {
            hn.Utilde = rid.interp;
            hn.Vtilde = cid.interp;
        }
    }
    return out;
}

} // namespace

Matrix Sampler::elements(const std::vector<Index>& rows, const std::vector<Index>& cols) const {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i)
            out(static_cast<Index>(i), static_cast<Index>(j)) = element(rows[i], cols[j]);
    return out;
}

Matrix Sampler::elements(IndexRange rows, IndexRange cols) const {
    Matrix out(rows.size(), cols.size());
    for (Index j = 0; j < cols.size(); ++j)
        for (Index i = 0; i < rows.size(); ++i)
            out(i, j) = element(rows.begin + i, cols.begin + j);
    return out;
}

DenseKernelSampler::DenseKernelSampler(const PointMatrix& points, double h) : points_(&points), h_(h) {
    if (!(h > 0.0))
        throw std::invalid_argument("kernel width h must be positive");
}

Matrix DenseKernelSampler::apply(const Matrix& x) const { return dense_matvec(*points_, {h_, 0.0}, x); }

double DenseKernelSampler::element(Index i, Index j) const { return gauss_entry(*points_, i, *points_, j, h_); }

HMatrixSampler::HMatrixSampler(const PointMatrix& points, double h, std::shared_ptr<const HMatrix> hm)
    : points_(&points), h_(h), hm_(std::move(hm)) {
    if (!hm_ || hm_->n() != points.rows())
        throw std::invalid_argument("HMatrixSampler: H-matrix does not match the points");
}

Matrix HMatrixSampler::apply(const Matrix& x) const { return hm_->matvec(x); }
Matrix HMatrixSampler::apply_transpose(const Matrix& x) const { return hm_->matvec_transpose(x); }
double HMatrixSampler::element(Index i, Index j) const { return gauss_entry(*points_, i, *points_, j, h_); }

MatrixSampler::MatrixSampler(Matrix a, bool symmetric) : a_(std::move(a)), symmetric_(symmetric) {
    if (a_.rows() != a_.cols())
        throw std::invalid_argument("MatrixSampler: matrix must be square");
}

Index HssNode::rank() const { return U.rows() > 0 ? U.cols() : Utilde.cols(); }

HssMatrix hss_compress(const Sampler& sampler, const ClusterTree& tree, const HssOptions& opts) {
    if (sampler.n() != tree.n())
        throw std::invalid_argument("hss_compress: sampler and tree disagree on n");
    if (!(opts.tol > 0.0))
        throw std::invalid_argument("hss_compress: tol must be positive");
    Timer total;
    HssMatrix hm;
    hm.tree_ = tree;
    hm.tol_ = opts.tol;

    const Index n = tree.n();
    const bool sym = sampler.symmetric();
    std::mt19937_64 rng(opts.seed);
    Index d = std::clamp<Index>(opts.d0, 1, n);
    Matrix r(n, d), s, rc, sc;
    fill_gaussian(r, 0, rng);
    {
        Timer t;
        s = sampler.apply(r);
        if (!sym) {
            rc.resize(n, d);
            fill_gaussian(rc, 0, rng);
            sc = sampler.apply_transpose(rc);
        }
        hm.timings_.sample_s += t.seconds();
    }

    PassResult pass;
    for (;;) {
        ++hm.timings_.rounds;
        double abs_tol = opts.abs_tol;
        if (abs_tol < 0.0) {
            double scale = s.rowwise().norm().maxCoeff();
            if (!sym)
                scale = std::max(scale, sc.rowwise().norm().maxCoeff());
            abs_tol = kAbsFloorFactor * opts.tol * scale;
        }
        pass = compress_pass(sampler, tree, r, s, rc, sc, sym, opts.tol, abs_tol, opts.oversampling);
        if (!pass.insufficient || d >= n)
            break;
        const Index grown = std::min(n, d + std::max<Index>(1, opts.dstep));
        Timer t;
        r.conservativeResize(n, grown);
        fill_gaussian(r, d, rng);
        s.conservativeResize(n, grown);
        s.rightCols(grown - d) = sampler.apply(r.rightCols(grown - d));
        if (!sym) {
            rc.conservativeResize(n, grown);
            fill_gaussian(rc, d, rng);
            sc.conservativeResize(n, grown);
            sc.rightCols(grown - d) = sampler.apply_transpose(rc.rightCols(grown - d));
        }
        hm.timings_.sample_s += t.seconds();
        d = grown;
    }
    hm.nodes_ = std::move(pass.nodes);
    hm.max_rank_ = pass.max_rank;
    hm.timings_.sample_columns = d;

    const auto& root = tree.node(tree.root());
    if (!root.is_leaf()) {
        for (Index child : {root.left, root.right}) {
            const Index k = hm.nodes_[static_cast<std::size_t>(child)].rank();
            const Index m = tree.node(child).range.size();
            if (2 * k > m) {
                hm.warnings_.push_back("matrix not HSS-compressible at this tolerance (rank " + std::to_string(k) +
                                       " for a root child of size " + std::to_string(m) + ")");
                break;
            }
        }
    }
    hm.timings_.other_s = std::max(0.0, total.seconds() - hm.timings_.sample_s);
    return hm;
}

Matrix HssMatrix::matvec(const Matrix& x) const {
    const Index n = this->n();
    if (x.rows() != n)
        throw std::invalid_argument("hss_matvec: X must have n rows");
    const Index k = x.cols();
    Matrix y = Matrix::Zero(n, k);
    const auto& post = tree_.postorder();
    std::vector<Matrix> up(nodes_.size()), down(nodes_.size());

    for (Index id : post) {
        const auto& tn = tree_.node(id);
        const auto& hn = nodes_[static_cast<std::size_t>(id)];
        if (id == tree_.root())
            break;
        if (tn.is_leaf()) {
            up[static_cast<std::size_t>(id)] = hn.V.transpose() * x.middleRows(tn.range.begin, tn.range.size());
        } else {
            const auto& ul = up[static_cast<std::size_t>(tn.left)];
            const auto& ur = up[static_cast<std::size_t>(tn.right)];
            up[static_cast<std::size_t>(id)] =
                hn.Vtilde.topRows(ul.rows()).transpose() * ul + hn.Vtilde.bottomRows(ur.rows()).transpose() * ur;
        }
    }
    for (auto it = post.rbegin(); it != post.rend(); ++it) {
        const Index id = *it;
        const auto& tn = tree_.node(id);
        const auto& hn = nodes_[static_cast<std::size_t>(id)];
        if (tn.is_leaf()) {
            auto ys = y.middleRows(tn.range.begin, tn.range.size());
            ys.noalias() = hn.D * x.middleRows(tn.range.begin, tn.range.size());
            if (id != tree_.root())
                ys.noalias() += hn.U * down[static_cast<std::size_t>(id)];
            continue;
        }
        Matrix dl = hn.B_lr * up[static_cast<std::size_t>(tn.right)];
        Matrix dr = hn.B_rl * up[static_cast<std::size_t>(tn.left)];
        if (id != tree_.root()) {
            const Matrix t = hn.Utilde * down[static_cast<std::size_t>(id)];
            dl += t.topRows(dl.rows());
            dr += t.bottomRows(dr.rows());
        }
        down[static_cast<std::size_t>(tn.left)] = std::move(dl);
        down[static_cast<std::size_t>(tn.right)] = std::move(dr);
    }
    return y;
}

Matrix HssMatrix::to_dense() const { return matvec(Matrix::Identity(n(), n())); }

namespace {
Matrix expand(const HssMatrix& hm, Index id, bool rows) {
    const auto& tn = hm.tree().node(id);
    const auto& hn = hm.node(id);
    if (tn.is_leaf())
        return rows ? hn.U : hn.V;
    const Matrix l = expand(hm, tn.left, rows);
    const Matrix r = expand(hm, tn.right, rows);
    Matrix bd = Matrix::Zero(l.rows() + r.rows(), l.cols() + r.cols());
    bd.topLeftCorner(l.rows(), l.cols()) = l;
    bd.bottomRightCorner(r.rows(), r.cols()) = r;
    return bd * (rows ? hn.Utilde : hn.Vtilde);
}
} // namespace

Matrix HssMatrix::expanded_row_basis(Index node) const {
    if (node == tree_.root())
        throw std::invalid_argument("the root has no basis");
    return expand(*this, node, true);
}

Matrix HssMatrix::expanded_col_basis(Index node) const {
    if (node == tree_.root())
        throw std::invalid_argument("the root has no basis");
    return expand(*this, node, false);
}

HssStats hss_stats(const HssMatrix& hm) {
    HssStats st;
    std::size_t entries = 0;
    for (const auto& nd : hm.nodes())
        entries += static_cast<std::size_t>(nd.D.size() + nd.U.size() + nd.V.size() + nd.Utilde.size() +
                                            nd.Vtilde.size() + nd.B_lr.size() + nd.B_rl.size());
    st.memory_bytes = entries * kEntryBytes;
    st.max_rank = hm.max_rank_observed();
    st.leaf_count = static_cast<Index>(hm.tree().leaves().size());
    st.level_count = hm.tree().level_count();
    return st;
}

} // namespace hik

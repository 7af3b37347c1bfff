#include "hik/ulv.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hik {

namespace {

struct Reduced {
    Matrix d; ///< reduced x reduced
    Matrix u; ///< reduced x k
    Matrix v; ///< reduced x k
};

Matrix blockdiag(const Matrix& a, const Matrix& b) {
    Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

} // namespace

UlvFactorization ulv_factor(const HssMatrix& hm, double lambda) {
    if (!std::isfinite(lambda))
        throw std::invalid_argument("ulv_factor: lambda must be finite");
    const ClusterTree& tree = hm.tree();
    UlvFactorization f;
    f.n_ = hm.n();
    f.lambda_ = lambda;
    f.tree_ = tree;
    f.factors_.resize(static_cast<std::size_t>(tree.size()));
    std::vector<Reduced> red(static_cast<std::size_t>(tree.size()));

    for (Index id : tree.postorder()) {
        const auto& tn = tree.node(id);
        const auto& hn = hm.node(id);
        auto& nf = f.factors_[static_cast<std::size_t>(id)];
        const bool root = id == tree.root();

        Matrix dsys, usys, vsys;
        if (tn.is_leaf()) {
            dsys = hn.D;
            dsys.diagonal().array() += lambda;
            usys = hn.U;
            vsys = hn.V;
        } else {
            auto& rl = red[static_cast<std::size_t>(tn.left)];
            auto& rr = red[static_cast<std::size_t>(tn.right)];
            nf.ub_lr = rl.u * hn.B_lr;
            nf.ub_rl = rr.u * hn.B_rl;
            const Index ml = rl.d.rows(), mr = rr.d.rows();
            dsys.resize(ml + mr, ml + mr);
            dsys.topLeftCorner(ml, ml) = rl.d;
            dsys.bottomRightCorner(mr, mr) = rr.d;
            dsys.topRightCorner(ml, mr) = nf.ub_lr * rr.v.transpose();
            dsys.bottomLeftCorner(mr, ml) = nf.ub_rl * rl.v.transpose();
            if (!root) {
                usys = blockdiag(rl.u, rr.u) * hn.Utilde;
                vsys = blockdiag(rl.v, rr.v) * hn.Vtilde;
                nf.vtilde = hn.Vtilde;
            }
            rl = {};
            rr = {};
        }
        const Index m = dsys.rows();
        nf.m = m;

        if (root) {
            if (m == 0)
                break;
            f.root_lu_.compute(dsys);
            const double scale = dsys.cwiseAbs().maxCoeff();
            const Matrix& lu = f.root_lu_.matrixLU();
            for (Index i = 0; i < m; ++i)
                if (!(std::abs(lu(i, i)) > std::numeric_limits<double>::epsilon() * scale * static_cast<double>(m)))
                    throw SolverError("singular reduced root system", id);
            break;
        }

        const Index k = usys.cols();
        nf.rank = k;
        if (k >= m) {
            nf.eliminated = 0;
            nf.reduced = m;
            red[static_cast<std::size_t>(id)] = {std::move(dsys), std::move(usys), std::move(vsys)};
            continue;
        }
        const Index e = m - k;
        Matrix uhat;
        if (k > 0) {
            Eigen::HouseholderQR<Matrix> qr(usys);
            const Matrix q = qr.householderQ();
            nf.omega.resize(m, m);
            nf.omega.topRows(e) = q.rightCols(e).transpose();
            nf.omega.bottomRows(k) = q.leftCols(k).transpose();
            dsys = nf.omega * dsys;
            uhat = (nf.omega * usys).bottomRows(k);
        } else {
            uhat.resize(0, 0);
        }

        Eigen::HouseholderQR<Matrix> lq(dsys.topRows(e).transpose());
        nf.w = lq.householderQ();
        nf.lower = lq.matrixQR().topLeftCorner(e, e).triangularView<Eigen::Upper>().toDenseMatrix().transpose();
        const double scale =
            std::max(dsys.size() ? dsys.cwiseAbs().maxCoeff() : 0.0, std::numeric_limits<double>::min());
        for (Index i = 0; i < e; ++i)
            if (!(std::abs(nf.lower(i, i)) > std::numeric_limits<double>::epsilon() * scale * static_cast<double>(m)))
                throw SolverError("singular diagonal block during elimination", id);

        const Matrix bottom = dsys.bottomRows(k) * nf.w;
        nf.e1 = bottom.leftCols(e);
        const Matrix vhat = nf.w.transpose() * vsys;
        nf.v1 = vhat.topRows(e);
        nf.eliminated = e;
        nf.reduced = k;
        red[static_cast<std::size_t>(id)] = {bottom.rightCols(k), std::move(uhat), vhat.bottomRows(k)};
    }
    return f;
}

Matrix UlvFactorization::solve(const Matrix& b) const {
    if (b.rows() != n_)
        throw std::invalid_argument("ulv_solve: right-hand side has " + std::to_string(b.rows()) + " rows, expected " +
                                    std::to_string(n_));
    const Index nrhs = b.cols();
    const auto count = static_cast<std::size_t>(tree_.size());
    std::vector<Matrix> r2(count), fproj(count), z1(count);
    Matrix root_y;

    for (Index id : tree_.postorder()) {
        const auto& tn = tree_.node(id);
        const auto& nf = factors_[static_cast<std::size_t>(id)];
        const auto uid = static_cast<std::size_t>(id);
        Matrix r, fin;
        if (tn.is_leaf()) {
            r = b.middleRows(tn.range.begin, tn.range.size());
        } else {
            const auto l = static_cast<std::size_t>(tn.left), rt = static_cast<std::size_t>(tn.right);
            r.resize(r2[l].rows() + r2[rt].rows(), nrhs);
            r.topRows(r2[l].rows()) = r2[l] - nf.ub_lr * fproj[rt];
            r.bottomRows(r2[rt].rows()) = r2[rt] - nf.ub_rl * fproj[l];
            if (id != tree_.root()) {
                Matrix stacked(fproj[l].rows() + fproj[rt].rows(), nrhs);
                stacked << fproj[l], fproj[rt];
                fin = nf.vtilde.transpose() * stacked;
            }
            r2[l].resize(0, 0);
            r2[rt].resize(0, 0);
        }
        if (id == tree_.root()) {
            root_y = r.rows() ? Matrix(root_lu_.solve(r)) : r;
            break;
        }
        if (tn.is_leaf())
            fin = Matrix::Zero(nf.rank, nrhs);
        if (nf.eliminated == 0) {
            r2[uid] = std::move(r);
            fproj[uid] = std::move(fin);
        } else {
            const Matrix rhat = nf.omega.size() ? Matrix(nf.omega * r) : r;
            z1[uid] = nf.lower.triangularView<Eigen::Lower>().solve(rhat.topRows(nf.eliminated));
            r2[uid] = rhat.bottomRows(nf.reduced) - nf.e1 * z1[uid];
            fproj[uid] = fin + nf.v1.transpose() * z1[uid];
        }
    }

    Matrix x(n_, nrhs);
    // Backward: hand each node its reduced variables, expand through W, pass to children.
    std::vector<Matrix> z2(count);
    z2[static_cast<std::size_t>(tree_.root())] = std::move(root_y);
    const auto& post = tree_.postorder();
    for (auto it = post.rbegin(); it != post.rend(); ++it) {
        const Index id = *it;
        const auto uid = static_cast<std::size_t>(id);
        const auto& tn = tree_.node(id);
        const auto& nf = factors_[uid];
        Matrix xs;
        if (id == tree_.root() || nf.eliminated == 0) {
            xs = std::move(z2[uid]);
        } else {
            Matrix z(nf.m, nrhs);
            z << z1[uid], z2[uid];
            xs = nf.w * z;
        }
        if (tn.is_leaf()) {
            x.middleRows(tn.range.begin, tn.range.size()) = xs;
        } else {
            const Index ml = factors_[static_cast<std::size_t>(tn.left)].reduced;
            z2[static_cast<std::size_t>(tn.left)] = xs.topRows(ml);
            z2[static_cast<std::size_t>(tn.right)] = xs.bottomRows(xs.rows() - ml);
        }
    }
    return x;
}

} // namespace hik

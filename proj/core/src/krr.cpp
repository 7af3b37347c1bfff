#include "hik/krr.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "hik/parallel.hpp"
#include "hik/timer.hpp"

namespace hik {

namespace {

constexpr Index kPredictBlock = 256;

Matrix permuted_targets(const ClusterTree& tree, std::span<const int> labels, int classes) {
    const Index n = tree.n();
    Matrix y(n, classes);
    for (Index i = 0; i < n; ++i) {
        const int l = labels[static_cast<std::size_t>(tree.perm()[static_cast<std::size_t>(i)])];
        if (classes == 1)
            y(i, 0) = l;
        else
            for (int c = 0; c < classes; ++c)
                y(i, c) = l == c ? 1.0 : -1.0;
    }
    return y;
}

void check_test_dim(const PointMatrix& train, const DataMatrix& test) {
    if (train.cols() != test.d())
        throw std::invalid_argument("test dimension " + std::to_string(test.d()) + " does not match training dimension " +
                                    std::to_string(train.cols()));
}

} // namespace

std::string to_string(SolverKind kind) {
    switch (kind) {
    case SolverKind::Dense: return "dense";
    case SolverKind::HssDense: return "hss";
    case SolverKind::HssHmat: return "hmat";
    }
    return "?";
}

SolverKind parse_solver_kind(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "dense")
        return SolverKind::Dense;
    if (s == "hss" || s == "hss+dense")
        return SolverKind::HssDense;
    if (s == "hmat" || s == "hss+hmat")
        return SolverKind::HssHmat;
    throw std::invalid_argument("unknown solver '" + name + "'");
}

PreparedKernel::PreparedKernel(const PointMatrix& points, double h, ClusterMethod method, const SolverOptions& opts)
    : h_(h), opts_(opts) {
    KernelConfig{h, 0.0}.validate();
    DataMatrix data{points, std::nullopt};
    Timer t;
    tree_ = build_tree(data, method, opts.leaf_size);
    points_ = apply_permutation(data, tree_).points;
    timings_.cluster_s = t.seconds();

    switch (opts.kind) {
    case SolverKind::Dense: {
        t.reset();
        dense_k_ = kernel_block(points_, {0, points_.rows()}, points_, {0, points_.rows()}, h);
        timings_.compress_s = t.seconds();
        break;
    }
    case SolverKind::HssDense: {
        DenseKernelSampler sampler(points_, h);
        t.reset();
        hss_ = std::make_shared<HssMatrix>(hss_compress(sampler, tree_, opts.hss));
        timings_.compress_s = t.seconds();
        timings_.sample_s = hss_->timings().sample_s;
        break;
    }
    case SolverKind::HssHmat: {
        HMatrixOptions hopt = opts.hmat;
        if (!(hopt.tol > 0.0))
            hopt.tol = opts.hss.tol / 10.0;
        t.reset();
        hmat_ = std::make_shared<HMatrix>(build_hmatrix(points_, tree_, {h, 0.0}, hopt));
        timings_.hmatrix_s = t.seconds();
        HMatrixSampler sampler(points_, h, hmat_);
        t.reset();
        hss_ = std::make_shared<HssMatrix>(hss_compress(sampler, tree_, opts.hss));
        timings_.compress_s = t.seconds();
        timings_.sample_s = hss_->timings().sample_s;
        break;
    }
    }
}

std::optional<HssStats> PreparedKernel::stats() const {
    if (!hss_)
        return std::nullopt;
    return hss_stats(*hss_);
}

PreparedKernel::Factored PreparedKernel::factor(double lambda) const {
    KernelConfig{h_, lambda}.validate();
    Factored f;
    f.lambda_ = lambda;
    if (opts_.kind == SolverKind::Dense) {
        Matrix a = dense_k_;
        a.diagonal().array() += lambda;
        f.dense_.emplace(a);
        if (f.dense_->info() != Eigen::Success)
            throw SolverError("dense Cholesky factorization failed (K + lambda I not positive definite)");
    } else {
        if (!(lambda > 0.0))
            throw std::invalid_argument("the HSS solvers require lambda > 0");
        f.ulv_.emplace(ulv_factor(*hss_, lambda));
    }
    return f;
}

Matrix PreparedKernel::Factored::solve(const Matrix& rhs) const {
    if (dense_)
        return dense_->solve(rhs);
    return ulv_->solve(rhs);
}

KrrModel MulticlassModel::submodel(int c) const {
    if (c < 0 || c >= class_count())
        throw std::out_of_range("class id out of range");
    return {tree, train_points, w.col(c), cfg, solver_tol};
}

namespace {

Matrix solve_targets(const PreparedKernel& prep, const Matrix& y, double lambda, TrainReport* report) {
    Timer t;
    const auto fac = prep.factor(lambda);
    const double factor_s = t.seconds();
    t.reset();
    Matrix w = fac.solve(y);
    const double solve_s = t.seconds();
    if (!w.allFinite())
        throw SolverError("solver produced non-finite weights");
    if (report) {
        report->timings = prep.timings();
        report->timings.factor_s = factor_s;
        report->timings.solve_s = solve_s;
        report->hss = prep.stats();
        if (prep.hmatrix())
            report->hmatrix_bytes = h_memory(*prep.hmatrix());
        if (prep.hss())
            report->warnings = prep.hss()->warnings();
    }
    return w;
}

} // namespace

KrrModel train(const PreparedKernel& prepared, std::span<const int> labels, double lambda, TrainReport* report) {
    if (static_cast<Index>(labels.size()) != prepared.tree().n())
        throw std::invalid_argument("label count does not match the training points");
    if (!is_binary_pm1(labels))
        throw std::invalid_argument("binary training needs labels in {-1, +1}");
    const Matrix y = permuted_targets(prepared.tree(), labels, 1);
    KrrModel model;
    model.tree = prepared.tree();
    model.train_points = prepared.points();
    model.w = solve_targets(prepared, y, lambda, report).col(0);
    model.cfg = {prepared.h(), lambda};
    model.solver_tol = prepared.kind() == SolverKind::Dense ? 0.0 : prepared.options().hss.tol;
    return model;
}

KrrModel train(const DataMatrix& train_data, const KernelConfig& cfg, ClusterMethod method, const SolverOptions& solver,
               TrainReport* report) {
    cfg.validate();
    train_data.validate();
    if (!train_data.labels)
        throw std::invalid_argument("training data has no labels");
    PreparedKernel prep(train_data.points, cfg.h, method, solver);
    return train(prep, *train_data.labels, cfg.lambda, report);
}

Matrix decision_scores(const PointMatrix& train_points, const Matrix& w, double h, const PointMatrix& test) {
    if (w.rows() != train_points.rows())
        throw std::invalid_argument("weight length does not match the training points");
    Matrix scores(test.rows(), w.cols());
    const IndexRange all{0, train_points.rows()};
    parallel_for(0, test.rows(), kPredictBlock, [&](Index b, Index e) {
        const Matrix kt = kernel_block(test, {b, e}, train_points, all, h);
        scores.middleRows(b, e - b).noalias() = kt * w;
    });
    return scores;
}

std::vector<int> predict_from_scores(const Vector& scores) {
    std::vector<int> out(static_cast<std::size_t>(scores.size()));
    for (Index i = 0; i < scores.size(); ++i)
        out[static_cast<std::size_t>(i)] = scores(i) < 0.0 ? -1 : 1;
    return out;
}

std::vector<int> predict(const KrrModel& model, const DataMatrix& test) {
    check_test_dim(model.train_points, test);
    const Matrix s = decision_scores(model.train_points, model.w, model.cfg.h, test.points);
    return predict_from_scores(s.col(0));
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("accuracy: length mismatch");
    if (predicted.empty())
        throw std::invalid_argument("accuracy: no labels");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

MulticlassModel train_multiclass(const DataMatrix& train_data, const KernelConfig& cfg, ClusterMethod method,
                                 const SolverOptions& solver, TrainReport* report) {
    cfg.validate();
    train_data.validate();
    if (!train_data.labels)
        throw std::invalid_argument("training data has no labels");
    const auto& labels = *train_data.labels;
    const int c = class_count(labels);
    if (c < 2)
        throw std::invalid_argument("multiclass training needs at least two classes");
    std::vector<char> present(static_cast<std::size_t>(c), 0);
    for (int l : labels)
        present[static_cast<std::size_t>(l)] = 1;
    for (int k = 0; k < c; ++k)
        if (!present[static_cast<std::size_t>(k)])
            throw std::invalid_argument("class " + std::to_string(k) + " is absent from the training data");

    PreparedKernel prep(train_data.points, cfg.h, method, solver);
    const Matrix y = permuted_targets(prep.tree(), labels, c);
    MulticlassModel model;
    model.tree = prep.tree();
    model.train_points = prep.points();
    model.w = solve_targets(prep, y, cfg.lambda, report);
    model.cfg = cfg;
    model.solver_tol = solver.kind == SolverKind::Dense ? 0.0 : solver.hss.tol;
    return model;
}

std::vector<int> argmax_rows(const Matrix& scores) {
    std::vector<int> out(static_cast<std::size_t>(scores.rows()));
    for (Index i = 0; i < scores.rows(); ++i) {
        Index best = 0;
        for (Index c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best))
                best = c;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

std::vector<int> predict_multiclass(const MulticlassModel& model, const DataMatrix& test) {
    check_test_dim(model.train_points, test);
    return argmax_rows(decision_scores(model.train_points, model.w, model.cfg.h, test.points));
}

} // namespace hik

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hik/cluster.hpp"
#include "hik/data.hpp"
#include "hik/hmat.hpp"
#include "hik/hss.hpp"
#include "hik/kernel.hpp"
#include "hik/ulv.hpp"

namespace hik {

enum class SolverKind { Dense, HssDense, HssHmat };

std::string to_string(SolverKind kind);
/// dense, hss (dense sampler) or hmat (H-matrix sampler)
SolverKind parse_solver_kind(const std::string& name);

struct SolverOptions {
    SolverKind kind = SolverKind::HssDense;
    HssOptions hss;
    /// H-matrix sampler settings. hmat.tol <= 0 selects hss.tol / 10.
    HMatrixOptions hmat{.eta = 2.0, .tol = 0.0, .leaf_size = 64, .max_rank = 0};
    Index leaf_size = 16;
};

struct TrainTimings {
    double cluster_s = 0.0;
    double hmatrix_s = 0.0;
    double compress_s = 0.0; ///< total HSS construction, sampling included
    double sample_s = 0.0;
    double factor_s = 0.0;
    double solve_s = 0.0;
};

/// Steps 0 and 1 for a fixed h: reordering plus either the dense kernel matrix or
/// its HSS compression. factor() may be called for any number of lambdas.
class PreparedKernel {
public:
    PreparedKernel(const PointMatrix& points, double h, ClusterMethod method, const SolverOptions& opts);

    class Factored {
    public:
        /// rhs and result are in tree order.
        Matrix solve(const Matrix& rhs) const;
        double lambda() const { return lambda_; }

    private:
        friend class PreparedKernel;
        double lambda_ = 0.0;
        std::optional<Eigen::LLT<Matrix>> dense_;
        std::optional<UlvFactorization> ulv_;
    };

    Factored factor(double lambda) const;

    const ClusterTree& tree() const { return tree_; }
    /// Points in tree order.
    const PointMatrix& points() const { return points_; }
    double h() const { return h_; }
    SolverKind kind() const { return opts_.kind; }
    const SolverOptions& options() const { return opts_; }
    const HssMatrix* hss() const { return hss_ ? hss_.get() : nullptr; }
    const HMatrix* hmatrix() const { return hmat_ ? hmat_.get() : nullptr; }
    const TrainTimings& timings() const { return timings_; }
    std::optional<HssStats> stats() const;

private:
    ClusterTree tree_;
    PointMatrix points_;
    double h_;
    SolverOptions opts_;
    Matrix dense_k_;
    std::shared_ptr<HMatrix> hmat_;
    std::shared_ptr<HssMatrix> hss_;
    TrainTimings timings_;
};

/// Binary classifier: weights over the reordered training points.
struct KrrModel {
    ClusterTree tree;
    PointMatrix train_points; ///< tree order
    Vector w;                 ///< tree order
    KernelConfig cfg;
    double solver_tol = 0.0;
};

/// One-vs-all classifier: column c of w scores class c.
struct MulticlassModel {
    ClusterTree tree;
    PointMatrix train_points;
    Matrix w; ///< n x c
    KernelConfig cfg;
    double solver_tol = 0.0;

    int class_count() const { return static_cast<int>(w.cols()); }
    /// Binary view of one class column.
    KrrModel submodel(int c) const;
};

struct TrainReport {
    TrainTimings timings;
    std::optional<HssStats> hss;
    std::size_t hmatrix_bytes = 0;
    std::vector<std::string> warnings;
};

/// Algorithm: reorder, compress (or assemble), factor K + lambda I, solve for w.
/// Labels must be +-1. The HSS solvers require lambda > 0.
KrrModel train(const DataMatrix& train, const KernelConfig& cfg, ClusterMethod method,
               const SolverOptions& solver, TrainReport* report = nullptr);

/// Same, reusing a prepared kernel.
KrrModel train(const PreparedKernel& prepared, std::span<const int> labels, double lambda,
               TrainReport* report = nullptr);

/// Scores w^T K'(i) for each test point; blocks of test points are evaluated in turn.
Matrix decision_scores(const PointMatrix& train_points, const Matrix& w, double h, const PointMatrix& test);

/// sign(score) with sign(0) = +1.
std::vector<int> predict(const KrrModel& model, const DataMatrix& test);
std::vector<int> predict_from_scores(const Vector& scores);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Labels are class ids 0..c-1 and every class must be present. One factorization
/// is shared across the c right-hand sides.
MulticlassModel train_multiclass(const DataMatrix& train, const KernelConfig& cfg, ClusterMethod method,
                                 const SolverOptions& solver, TrainReport* report = nullptr);

/// argmax over classes of the signed score; ties go to the lowest class id.
std::vector<int> predict_multiclass(const MulticlassModel& model, const DataMatrix& test);
std::vector<int> argmax_rows(const Matrix& scores);

} // namespace hik

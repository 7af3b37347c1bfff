#include <gtest/gtest.h>

#include "hik/cluster.hpp"
#include "hik/hss.hpp"
#include "hik/kernel.hpp"
#include "hik/ulv.hpp"
#include "oracles.hpp"

using namespace hik;
using hik::testing::blob_benchmark;
using hik::testing::oracle_kernel;
using hik::testing::oracle_solve;
using hik::testing::rel_err;

namespace {

struct Problem {
    ClusterTree tree;
    PointMatrix points;
};

Problem prepare(const DataMatrix& dm, Index leaf = 16) {
    auto tree = build_tree(dm, {ClusterTag::TwoMeans, 1}, leaf);
    auto pts = apply_permutation(dm, tree).points;
    return {std::move(tree), std::move(pts)};
}

HssMatrix compress(const Problem& p, double h, double tol, std::uint64_t seed = 1) {
    DenseKernelSampler s(p.points, h);
    HssOptions o;
    o.tol = tol;
    o.seed = seed;
    return hss_compress(s, p.tree, o);
}

} // namespace

TEST(Ulv, IdentityKernel) {
    DataMatrix dm{PointMatrix::Random(100, 2), std::nullopt};
    const auto p = prepare(dm);
    const auto hm = compress(p, 1e-8, 1e-6);
    const Matrix b = Matrix::Random(100, 2);
    EXPECT_LE((ulv_factor(hm, 1.0).solve(b) - b / 2).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((ulv_factor(hm, 4.0).solve(Matrix::Ones(100, 1)) - Matrix::Constant(100, 1, 0.2)).cwiseAbs().maxCoeff(),
              1e-15);
    for (double lambda : {0.5, 2.0, 7.0}) {
        const auto f = shift_diagonal(hm, lambda);
        EXPECT_LE((f.solve(b) - b / (1 + lambda)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Ulv, SingleLeafMatchesDenseSolve) {
    DataMatrix dm{PointMatrix::Random(12, 2), std::nullopt};
    const auto p = prepare(dm);
    ASSERT_EQ(p.tree.size(), 1);
    const auto hm = compress(p, 0.7, 1e-10);
    const Matrix b = Matrix::Random(12, 1);
    const Matrix ref = oracle_solve(oracle_kernel(p.points, 0.7), 0.3, b);
    EXPECT_LE(rel_err(ulv_factor(hm, 0.3).solve(b), ref), 1e-12);
}

TEST(Ulv, ExactSolveOfCompressedOperator) {
    const auto dm = blob_benchmark(1000, 2);
    const auto p = prepare(dm);
    const auto hm = compress(p, 1.0, 1e-2);
    const Matrix b = Matrix::Random(1000, 3);
    const Matrix x = ulv_factor(hm, 1.0).solve(b);
    EXPECT_LE(rel_err(hss_matvec(hm, x) + x, b), 1e-12);
}

TEST(Ulv, ResidualAgainstDenseKernel) {
    const auto dm = blob_benchmark(1000, 1);
    const auto p = prepare(dm);
    const auto hm = compress(p, 1.0, 1e-8);
    const Matrix b = Matrix::Random(1000, 1);
    const Matrix x = ulv_factor(hm, 1.0).solve(b);
    const Matrix k = oracle_kernel(p.points, 1.0);
    EXPECT_LE((k * x + x - b).norm() / b.norm(), 1e-6);
}

TEST(Ulv, ZeroRhs) {
    const auto dm = blob_benchmark(300, 3);
    const auto p = prepare(dm);
    const auto f = ulv_factor(compress(p, 1.0, 1e-4), 0.5);
    EXPECT_EQ(f.solve(Matrix::Zero(300, 1)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Ulv, MultipleRhsEqualSingleSolves) {
    const auto dm = blob_benchmark(500, 4);
    const auto p = prepare(dm);
    const auto f = ulv_factor(compress(p, 1.0, 1e-4), 1.0);
    const Matrix b = Matrix::Random(500, 8);
    const Matrix x = f.solve(b);
    for (Index c = 0; c < 8; ++c) {
        const Matrix xc = f.solve(b.col(c));
        EXPECT_LE((x.col(c) - xc).norm(), 1e-12 * xc.norm()) << "column " << c;
    }
}

TEST(Ulv, DimensionMismatch) {
    const auto dm = blob_benchmark(100, 4);
    const auto p = prepare(dm);
    const auto f = ulv_factor(compress(p, 1.0, 1e-4), 1.0);
    EXPECT_ANY_THROW(f.solve(Matrix::Zero(99, 1)));
}

TEST(Ulv, SingularSystemReportsNode) {
    DataMatrix dm{PointMatrix::Random(64, 2), std::nullopt};
    const auto p = prepare(dm, 16);
    const auto hm = compress(p, 1e-8, 1e-6);
    try {
        ulv_factor(hm, -1.0);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_GE(e.node(), 0);
    }
}

TEST(Ulv, ShiftMatchesFreshBuild) {
    const auto dm = blob_benchmark(800, 5);
    const auto p = prepare(dm);
    const double tol = 1e-6;
    const auto base = compress(p, 1.0, tol, 9);
    const Matrix b = Matrix::Random(800, 1);
    const Matrix first = ulv_factor(base, 2.0).solve(b);
    for (double lambda : {0.5, 1.0, 4.0}) {
        const Matrix shifted = shift_diagonal(base, lambda).solve(b);
        const Matrix fresh = ulv_factor(compress(p, 1.0, tol, 9), lambda).solve(b);
        EXPECT_LE(rel_err(shifted, fresh), 1e-6) << "lambda " << lambda;
    }
    EXPECT_EQ(shift_diagonal(base, 2.0).solve(b), first);
}

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "hik/tune.hpp"
#include "oracles.hpp"

using namespace hik;
using hik::testing::blobs_at;

namespace {

DataMatrix pm_blobs(Index per, std::uint64_t seed) {
    auto dm = blobs_at({{0, 0}, {8, 0}, {0, 8}, {8, 8}}, per, 1.0, seed);
    for (auto& l : *dm.labels)
        l = l % 2 ? -1 : 1;
    return dm;
}

struct Fixture : ::testing::Test {
    DataMatrix train = pm_blobs(60, 1);
    DataMatrix val = pm_blobs(25, 2);
    TuneContext ctx() const {
        SolverOptions o;
        o.kind = SolverKind::HssDense;
        o.hss.tol = 1e-3;
        return {&train, &val, {ClusterTag::TwoMeans, 1}, o};
    }
};

} // namespace

using Tune = Fixture;

TEST_F(Tune, SinglePointGrid) {
    SearchSpace s{0.5, 2.0, 0.1, 1.0, 1, 1};
    const auto r = grid_search(s, ctx());
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.best.h, 0.5);
    EXPECT_EQ(r.best.lambda, 0.1);
    EXPECT_EQ(r.compressions, 1);
    EXPECT_EQ(r.factorizations, 1);
}

TEST_F(Tune, GridAccountingAndQuality) {
    SearchSpace s{0.3, 3.0, 0.01, 1.0, 4, 5};
    const auto r = grid_search(s, ctx());
    EXPECT_EQ(r.records.size(), 20u);
    EXPECT_EQ(r.compressions, 4);
    EXPECT_EQ(r.factorizations, 20);
    EXPECT_EQ(r.best.validation_accuracy, 1.0);
    std::set<double> hs, ls;
    for (const auto& t : r.records) {
        hs.insert(t.h);
        ls.insert(t.lambda);
        EXPECT_GE(t.validation_accuracy, 0.0);
        EXPECT_LE(t.validation_accuracy, 1.0);
        EXPECT_GE(t.wall_time_s, 0.0);
    }
    EXPECT_EQ(hs.size(), 4u);
    EXPECT_EQ(ls.size(), 5u);
    EXPECT_DOUBLE_EQ(*hs.begin(), 0.3);
    EXPECT_DOUBLE_EQ(*hs.rbegin(), 3.0);
}

TEST_F(Tune, GridTieRule) {
    SearchSpace s{0.5, 2.0, 0.01, 0.1, 3, 3};
    const auto r = grid_search(s, ctx());
    for (const auto& t : r.records) {
        if (t.validation_accuracy == r.best.validation_accuracy) {
            EXPECT_GE(t.lambda, r.best.lambda);
            if (t.lambda == r.best.lambda)
                EXPECT_GE(t.h, r.best.h);
        }
    }
}

TEST_F(Tune, FailingTrialIsRecorded) {
    auto c = ctx();
    c.solver.hss.tol = -1.0;
    SearchSpace s{0.5, 1.0, 0.1, 1.0, 2, 2};
    const auto r = grid_search(s, c);
    ASSERT_EQ(r.records.size(), 4u);
    for (const auto& t : r.records) {
        EXPECT_EQ(t.validation_accuracy, 0.0);
        EXPECT_FALSE(t.error.empty());
    }
}

TEST_F(Tune, InvalidSpace) {
    EXPECT_ANY_THROW(grid_search(SearchSpace{2.0, 1.0, 0.1, 1.0}, ctx()));
    EXPECT_ANY_THROW(black_box_search(SearchSpace{}, BlackBoxOptions{.budget = 3}, ctx()));
}

TEST_F(Tune, BlackBoxDeterministic) {
    SearchSpace s{0.2, 5.0, 0.01, 10.0};
    const BlackBoxOptions o{.budget = 20, .seed = 9};
    const auto a = black_box_search(s, o, ctx());
    const auto b = black_box_search(s, o, ctx());
    ASSERT_EQ(a.records.size(), 20u);
    ASSERT_EQ(b.records.size(), 20u);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].h, b.records[i].h);
        EXPECT_EQ(a.records[i].lambda, b.records[i].lambda);
        EXPECT_EQ(a.records[i].validation_accuracy, b.records[i].validation_accuracy);
    }
    EXPECT_LE(a.compressions, 1);
}

TEST_F(Tune, BlackBoxStaysInSpaceAndRespectsCap) {
    SearchSpace s{0.2, 5.0, 0.01, 10.0};
    const auto r = black_box_search(s, {.budget = 40, .seed = 3, .max_compressions = 4}, ctx());
    EXPECT_LE(r.compressions, 4);
    std::set<double> hs;
    for (const auto& t : r.records) {
        EXPECT_GE(t.h, s.h_min);
        EXPECT_LE(t.h, s.h_max);
        EXPECT_GE(t.lambda, s.lambda_min);
        EXPECT_LE(t.lambda, s.lambda_max);
        hs.insert(t.h);
    }
    EXPECT_EQ(static_cast<Index>(hs.size()), r.compressions);
    EXPECT_EQ(r.factorizations, 40);
}

TEST_F(Tune, BlackBoxEqualAccuraciesReturnFirstTrial) {
    DataMatrix one_class = train;
    for (auto& l : *one_class.labels)
        l = 1;
    DataMatrix val_one = val;
    for (auto& l : *val_one.labels)
        l = 1;
    auto c = ctx();
    c.train = &one_class;
    c.validation = &val_one;
    const auto r = black_box_search(SearchSpace{0.5, 2.0, 0.1, 1.0}, {.budget = 4, .seed = 1}, c);
    ASSERT_EQ(r.records.size(), 4u);
    EXPECT_EQ(r.best.trial, 0);
}

TEST_F(Tune, TrialsCsv) {
    TrialRecord t{3, 0.5, 0.25, 0.75, 2'000'000, 7, 0.125, ""};
    const auto csv = trials_csv({t});
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "trial,h,lambda,acc,mem_mb,max_rank,time_s");
    EXPECT_EQ(row, "3,0.5,0.25,0.75,2,7,0.125");
}

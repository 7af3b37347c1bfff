#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "hik/data.hpp"

using namespace hik;

TEST(Data, CsvWithLabelColumn) {
    const auto dm = parse_csv("1,2,+1\n3,4,-1", 2);
    ASSERT_EQ(dm.n(), 2);
    ASSERT_EQ(dm.d(), 2);
    EXPECT_EQ(*dm.labels, (std::vector<int>{1, -1}));
    EXPECT_EQ(dm.points(1, 0), 3.0);
    EXPECT_EQ(dm.points(1, 1), 4.0);
}

TEST(Data, CsvHeaderAndNoLabels) {
    const auto dm = parse_csv("x,y\n0.5,1e3\n-2,7\n");
    EXPECT_EQ(dm.n(), 2);
    EXPECT_FALSE(dm.labels.has_value());
    EXPECT_DOUBLE_EQ(dm.points(0, 1), 1000.0);
}

TEST(Data, LibsvmFillsMissingWithZero) {
    const auto dm = parse_libsvm("+1 1:0.5 3:2.0");
    ASSERT_EQ(dm.n(), 1);
    ASSERT_EQ(dm.d(), 3);
    EXPECT_EQ(dm.points(0, 0), 0.5);
    EXPECT_EQ(dm.points(0, 1), 0.0);
    EXPECT_EQ(dm.points(0, 2), 2.0);
    EXPECT_EQ((*dm.labels)[0], 1);
}

TEST(Data, EmptyInputHasNoRecords) {
    try {
        parse_csv("");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("no records"), std::string::npos);
    }
    EXPECT_THROW(parse_libsvm("\n\n"), ParseError);
}

TEST(Data, InconsistentDimensionNamesLine) {
    try {
        parse_csv("1,2\n3,4\n5\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Data, BadLibsvmTokenNamesLine) {
    try {
        parse_libsvm("+1 1:2\n-1 2-3\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Data, NonFiniteRejected) { EXPECT_ANY_THROW(parse_csv("1,nan\n")); }

TEST(Data, LoadFallsBackToDataDir) {
    const auto dir = std::filesystem::temp_directory_path() / "hik_data_dir_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "tiny.csv") << "1,2,1\n3,4,-1\n";
    ::setenv("HIK_DATA_DIR", dir.c_str(), 1);
    const auto dm = load_dataset("tiny.csv", DataFormat::Csv, 2);
    EXPECT_EQ(dm.n(), 2);
    EXPECT_TRUE(resolve_data_path("tiny.csv").has_value());
    EXPECT_FALSE(resolve_data_path("definitely_missing.csv").has_value());
    ::unsetenv("HIK_DATA_DIR");
    std::filesystem::remove_all(dir);
}

TEST(Normalize, PopulationConvention) {
    DataMatrix dm{PointMatrix{{1.0}, {3.0}}, std::nullopt};
    auto [out, st] = normalize_zscore(dm);
    EXPECT_DOUBLE_EQ(out.points(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(out.points(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(st.mean(0), 2.0);
    EXPECT_DOUBLE_EQ(st.std(0), 1.0);
}

TEST(Normalize, ConstantColumnCenteredOnly) {
    DataMatrix dm{PointMatrix{{5.0, 1.0}, {5.0, 2.0}, {5.0, 6.0}}, std::nullopt};
    auto [out, st] = normalize_zscore(dm);
    EXPECT_EQ(st.std(0), 0.0);
    for (Index i = 0; i < 3; ++i)
        EXPECT_EQ(out.points(i, 0), 0.0);
}

TEST(Normalize, AlreadyNormalizedUnchanged) {
    DataMatrix dm{PointMatrix{{-1.0}, {1.0}, {-1.0}, {1.0}}, std::nullopt};
    auto [out, st] = normalize_zscore(dm);
    EXPECT_LE((out.points - dm.points).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, MomentsAfterNormalization) {
    BlobSpec spec;
    spec.n = 300;
    spec.d = 4;
    spec.clusters = 3;
    const auto [out, st] = normalize_zscore(make_blobs(spec));
    for (Index j = 0; j < out.d(); ++j) {
        const double mean = out.points.col(j).mean();
        const double var = (out.points.col(j).array() - mean).square().mean();
        EXPECT_NEAR(mean, 0.0, 1e-12);
        EXPECT_NEAR(std::sqrt(var), 1.0, 1e-12);
    }
}

TEST(Split, SizesFromFractions) {
    DataMatrix dm{PointMatrix::Random(10, 2), std::vector<int>(10, 1)};
    const auto parts = split_dataset(dm, {0.8, 0.1, 0.1}, 7);
    EXPECT_EQ(parts[0].n(), 8);
    EXPECT_EQ(parts[1].n(), 1);
    EXPECT_EQ(parts[2].n(), 1);
}

TEST(Split, Deterministic) {
    DataMatrix dm{PointMatrix::Random(50, 3), std::nullopt};
    const auto a = split_dataset(dm, {0.6, 0.2, 0.2}, 11);
    const auto b = split_dataset(dm, {0.6, 0.2, 0.2}, 11);
    for (int k = 0; k < 3; ++k)
        EXPECT_EQ(a[k].points, b[k].points);
}

TEST(Split, EmptyPartIsError) {
    DataMatrix dm{PointMatrix::Random(2, 1), std::nullopt};
    EXPECT_ANY_THROW(split_dataset(dm, {0.5, 0.25, 0.25}, 1));
}

TEST(Split, BadFractionsRejected) {
    DataMatrix dm{PointMatrix::Random(20, 1), std::nullopt};
    EXPECT_ANY_THROW(split_dataset(dm, {0.5, 0.2, 0.2}, 1));
}

TEST(Labels, OneVsAllAndClassCount) {
    const std::vector<int> ids{0, 2, 1, 2};
    EXPECT_EQ(one_vs_all_labels(ids, 2), (std::vector<int>{-1, 1, -1, 1}));
    EXPECT_EQ(class_count(ids), 3);
    EXPECT_TRUE(is_binary_pm1(std::vector<int>{1, -1, 1}));
    EXPECT_FALSE(is_binary_pm1(ids));
}

TEST(Blobs, ShapeAndDeterminism) {
    BlobSpec spec;
    spec.n = 101;
    spec.d = 3;
    spec.clusters = 4;
    const auto a = make_blobs(spec);
    const auto b = make_blobs(spec);
    EXPECT_EQ(a.n(), 101);
    EXPECT_EQ(a.d(), 3);
    EXPECT_EQ(a.points, b.points);
    std::set<int> classes(a.labels->begin(), a.labels->end());
    EXPECT_EQ(classes.size(), 4u);
}

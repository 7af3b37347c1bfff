#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "hik/io.hpp"
#include "oracles.hpp"

using namespace hik;

namespace fs = std::filesystem;

TEST(Io, LittleEndianRoundTrip) {
    const auto path = fs::temp_directory_path() / "hik_io_test.bin";
    const std::vector<double> v{1.0, -2.5, 1e-300, 3.141592653589793};
    write_f64_le(path, v);
    EXPECT_EQ(fs::file_size(path), 32u);
    EXPECT_EQ(read_f64_le(path), v);
    std::ifstream in(path, std::ios::binary);
    unsigned char first[8];
    in.read(reinterpret_cast<char*>(first), 8);
    EXPECT_EQ(first[7], 0x3f);
    EXPECT_EQ(first[6], 0xf0);
    fs::remove(path);
}

TEST(Io, ModelRoundTrip) {
    auto dm = hik::testing::blobs_at({{0, 0}, {6, 0}, {0, 6}}, 20, 1.0, 3);
    SolverOptions o;
    o.kind = SolverKind::HssDense;
    const auto mc = train_multiclass(dm, {1.0, 0.5}, {ClusterTag::TwoMeans, 1}, o);
    StoredModel sm{mc, false, NormStats{Vector::Ones(2), Vector::Constant(2, 2.0)}, std::nullopt, {{"k", 1}}};
    const auto dir = fs::temp_directory_path() / "hik_model_test";
    save_model(dir, sm);
    const auto back = load_model(dir);
    EXPECT_FALSE(back.binary);
    EXPECT_EQ(back.model.w, mc.w);
    EXPECT_EQ(back.model.train_points, mc.train_points);
    EXPECT_EQ(back.model.tree.perm(), mc.tree.perm());
    EXPECT_EQ(back.model.cfg.h, 1.0);
    EXPECT_EQ(back.model.cfg.lambda, 0.5);
    ASSERT_TRUE(back.norm.has_value());
    EXPECT_EQ(back.norm->std(1), 2.0);
    EXPECT_EQ(back.extra.at("k"), 1);
    EXPECT_EQ(predict_multiclass(back.model, dm), predict_multiclass(mc, dm));
    fs::remove_all(dir);
}

TEST(Io, CorruptModelRejected) {
    const auto dir = fs::temp_directory_path() / "hik_model_bad";
    fs::create_directories(dir);
    std::ofstream(dir / "model.json") << "{\"format\": \"other\"}";
    EXPECT_ANY_THROW(load_model(dir));
    fs::remove_all(dir);
}

TEST(Io, MetricsJsonFields) {
    MetricsReport r;
    r.dataset = "x";
    r.accuracy = 0.5;
    const auto j = to_json(r);
    EXPECT_EQ(j.at("schema_version"), kMetricsSchemaVersion);
    EXPECT_EQ(j.at("accuracy"), 0.5);
    for (const char* k : {"hmatrix_s", "compress_s", "sample_s", "factor_s", "solve_s"})
        EXPECT_TRUE(j.at("timings").contains(k)) << k;
    r.accuracy.reset();
    EXPECT_TRUE(to_json(r).at("accuracy").is_null());
}

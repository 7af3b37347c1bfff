#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "hik/data.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using hik::Index;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = hik::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');)
            cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

bool has_type(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "null") return v.is_null();
    if (t == "boolean") return v.is_boolean();
    if (t == "array") return v.is_array();
    return false;
}

// Covers the draft-07 keywords the metrics schema uses.
void validate(const json& schema, const json& v, const std::string& where, std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_array()) {
            for (const auto& x : t)
                ok = ok || has_type(v, x.get<std::string>());
        } else {
            ok = has_type(v, t.get<std::string>());
        }
        if (!ok) {
            errors.push_back(where + ": wrong type");
            return;
        }
    }
    if (schema.contains("const") && v != schema["const"])
        errors.push_back(where + ": const mismatch");
    if (schema.contains("enum")) {
        const auto& e = schema["enum"];
        if (std::find(e.begin(), e.end(), v) == e.end())
            errors.push_back(where + ": not in enum");
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (schema.contains("minimum") && x < schema["minimum"].get<double>())
            errors.push_back(where + ": below minimum");
        if (schema.contains("maximum") && x > schema["maximum"].get<double>())
            errors.push_back(where + ": above maximum");
        if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>())
            errors.push_back(where + ": not above exclusiveMinimum");
    }
    if (v.is_object()) {
        for (const auto& k : schema.value("required", json::array()))
            if (!v.contains(k.get<std::string>()))
                errors.push_back(where + ": missing " + k.get<std::string>());
        const json props = schema.value("properties", json::object());
        for (const auto& [k, child] : v.items()) {
            if (props.contains(k))
                validate(props[k], child, where + "." + k, errors);
            else if (schema.value("additionalProperties", true) == false)
                errors.push_back(where + ": unexpected " + k);
        }
    }
}

std::vector<std::string> schema_errors(const json& report) {
    const json schema = json::parse(slurp(HIK_SCHEMA_PATH));
    std::vector<std::string> errors;
    validate(schema, report, "$", errors);
    return errors;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("hik_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
                std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string blobs(Index n, Index clusters = 4, std::uint64_t seed = 3, double sigma = 0.5) {
        const auto p = path("blobs_" + std::to_string(n) + ".csv");
        const auto r = run({"generate", "--n", std::to_string(n), "--clusters", std::to_string(clusters), "--sigma",
                            std::to_string(sigma), "--seed", std::to_string(seed), "--binary", "--out", p});
        EXPECT_EQ(r.code, 0) << r.err;
        return p;
    }

    fs::path dir_;
};

TEST_F(CliTest, MissingDatasetIsUsageError) {
    const auto r = run({"train", "--data", path("nope.csv"), "--model", path("m")});
    EXPECT_EQ(r.code, hik::cli::kExitUsage);
    EXPECT_NE(r.err.find("nope.csv"), std::string::npos);
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
    EXPECT_EQ(run({"train", "--bogus"}).code, hik::cli::kExitUsage);
    EXPECT_EQ(run({}).code, hik::cli::kExitUsage);
    EXPECT_EQ(run({"train", "--data", blobs(50), "--model", path("m"), "--method", "xyz"}).code,
              hik::cli::kExitUsage);
}

TEST_F(CliTest, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, hik::cli::kExitOk);
    EXPECT_NE(r.out.find("rank-study"), std::string::npos);
}

TEST_F(CliTest, MissingModelIsUsageError) {
    EXPECT_EQ(run({"predict", "--data", blobs(50), "--model", path("absent")}).code, hik::cli::kExitUsage);
}

TEST_F(CliTest, CorruptModelIsRuntimeError) {
    const auto data = blobs(60);
    ASSERT_EQ(run({"train", "--data", data, "--model", path("m")}).code, 0);
    std::ofstream(path("m") + "/weights.bin", std::ios::trunc) << "xx";
    const auto r = run({"predict", "--data", data, "--model", path("m"), "--out", path("p.csv")});
    EXPECT_EQ(r.code, hik::cli::kExitRuntime) << r.err;
}

TEST_F(CliTest, TrainThenPredictOnSameDataIsExact) {
    const auto data = blobs(300);
    const auto tr = run({"train", "--data", data, "--model", path("m"), "--test", data, "--h", "0.05", "--lambda",
                         "1e-3", "--tol", "1e-6"});
    ASSERT_EQ(tr.code, 0) << tr.err;
    const json train_report = json::parse(slurp(path("m") + "/report.json"));
    EXPECT_DOUBLE_EQ(train_report.at("accuracy").get<double>(), 1.0);

    const auto pr = run({"predict", "--data", data, "--model", path("m"), "--out", path("p.csv"), "--report",
                         path("r.json")});
    ASSERT_EQ(pr.code, 0) << pr.err;
    const json report = json::parse(slurp(path("r.json")));
    EXPECT_DOUBLE_EQ(report.at("accuracy").get<double>(), 1.0);
    const auto rows = read_csv(path("p.csv"));
    ASSERT_EQ(rows.size(), 301u);
    EXPECT_EQ(rows[0][0], "label");
}

TEST_F(CliTest, ReportsMatchSchema) {
    const auto data = blobs(200);
    ASSERT_EQ(run({"train", "--data", data, "--model", path("m"), "--sampler", "hmat", "--method", "kd"}).code, 0);
    const json train_report = json::parse(slurp(path("m") + "/report.json"));
    const auto e1 = schema_errors(train_report);
    EXPECT_TRUE(e1.empty()) << e1.front();
    EXPECT_EQ(train_report.at("solver"), "hss-hmat");
    EXPECT_EQ(train_report.at("method"), "kd");
    EXPECT_TRUE(train_report.at("accuracy").is_null());

    ASSERT_EQ(run({"predict", "--data", data, "--model", path("m"), "--out", path("p.csv"), "--report",
                   path("r.json")})
                  .code,
              0);
    const auto e2 = schema_errors(json::parse(slurp(path("r.json"))));
    EXPECT_TRUE(e2.empty()) << e2.front();
}

TEST_F(CliTest, SchemaRejectsBrokenReports) {
    const auto data = blobs(80);
    ASSERT_EQ(run({"train", "--data", data, "--model", path("m")}).code, 0);
    json r = json::parse(slurp(path("m") + "/report.json"));
    ASSERT_TRUE(schema_errors(r).empty());
    json missing = r;
    missing.erase("schema_version");
    EXPECT_FALSE(schema_errors(missing).empty());
    json negative = r;
    negative["timings"]["factor_s"] = -1.0;
    EXPECT_FALSE(schema_errors(negative).empty());
}

TEST_F(CliTest, ReportEmbedsSeedAndFlags) {
    const auto data = blobs(120);
    ASSERT_EQ(run({"train", "--data", data, "--model", path("m"), "--seed", "17", "--no-normalize"}).code, 0);
    const json r = json::parse(slurp(path("m") + "/report.json"));
    EXPECT_EQ(r.at("seed"), 17);
    EXPECT_EQ(r.at("flags").at("seed"), "17");
    EXPECT_EQ(r.at("flags").at("no-normalize"), true);
    EXPECT_TRUE(r.at("flags").contains("tol"));
    const auto timings = r.at("timings");
    for (const auto& [k, v] : timings.items())
        EXPECT_GE(v.get<double>(), 0.0) << k;
}

TEST_F(CliTest, RankStudyIdentityRegime) {
    const auto data = path("wide.csv");
    ASSERT_EQ(run({"generate", "--n", "400", "--d", "16", "--clusters", "4", "--binary", "--out", data}).code, 0);
    const auto r = run({"rank-study", "--data", data, "--h-list", "0.01", "--methods", "np,kd,pca,2mn", "--out",
                        path("ranks.csv"), "--spectra", path("spectra.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(path("ranks.csv"));
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"method", "h", "rows", "cols", "effective_rank", "sigma_max"}));
    std::size_t singular_values = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LE(std::stoi(rows[i][4]), 1) << rows[i][0];
        EXPECT_EQ(std::stoi(rows[i][2]) + std::stoi(rows[i][3]), 400);
        singular_values += static_cast<std::size_t>(std::min(std::stoi(rows[i][2]), std::stoi(rows[i][3])));
    }
    const auto spectra = read_csv(path("spectra.csv"));
    EXPECT_EQ(spectra[0], (std::vector<std::string>{"method", "h", "index", "sigma"}));
    EXPECT_EQ(spectra.size(), 1u + singular_values);
}

TEST_F(CliTest, RankStudyTwoPoints) {
    std::ofstream(path("two.csv")) << "0.0,0.0,1\n0.5,0.1,-1\n";
    const auto r = run({"rank-study", "--data", path("two.csv"), "--h-list", "0.01,1,100", "--out",
                        path("ranks.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(path("ranks.csv"));
    ASSERT_GT(rows.size(), 1u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][2], "1");
        EXPECT_EQ(rows[i][3], "1");
        const int rank = std::stoi(rows[i][4]);
        EXPECT_TRUE(rank == 0 || rank == 1);
    }
}

TEST_F(CliTest, RankStudyOrderingOnClusteredData) {
    const auto data = blobs(1024, 16, 5, 1.0);
    const auto r = run({"rank-study", "--data", data, "--h-list", "1", "--methods", "np,2mn", "--no-normalize",
                        "--out", path("ranks.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(path("ranks.csv"));
    ASSERT_EQ(rows.size(), 3u);
    ASSERT_EQ(rows[1][0], "np");
    ASSERT_EQ(rows[2][0], "2mn");
    EXPECT_LE(std::stoi(rows[2][4]), std::stoi(rows[1][4]));
}

TEST_F(CliTest, RankStudyRejectsOversize) {
    const auto data = blobs(4100);
    const auto r = run({"rank-study", "--data", data, "--out", path("ranks.csv")});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("--subsample"), std::string::npos);
    EXPECT_EQ(run({"rank-study", "--data", data, "--subsample", "300", "--h-list", "1", "--out", path("ranks.csv")})
                  .code,
              0);
}

TEST_F(CliTest, TuneWritesTrials) {
    const auto data = blobs(300);
    const auto r = run({"tune", "--data", data, "--h-min", "0.1", "--h-max", "10", "--lambda-min", "1e-3",
                        "--lambda-max", "10", "--strategy", "grid", "--grid", "3", "--out", path("trials.csv"),
                        "--report", path("tune.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(path("trials.csv"));
    EXPECT_EQ(rows.size(), 10u);
    const json rep = json::parse(slurp(path("tune.json")));
    EXPECT_EQ(rep.at("compressions"), 3);
    EXPECT_EQ(rep.at("factorizations"), 9);

    const auto bb = run({"tune", "--data", data, "--h-min", "0.1", "--h-max", "10", "--lambda-min", "1e-3",
                         "--lambda-max", "10", "--budget", "12", "--out", path("bb.csv")});
    ASSERT_EQ(bb.code, 0) << bb.err;
    EXPECT_EQ(read_csv(path("bb.csv")).size(), 13u);
}

TEST_F(CliTest, TuneRequiresBounds) {
    EXPECT_EQ(run({"tune", "--data", blobs(50), "--h-min", "0.1"}).code, hik::cli::kExitUsage);
}

TEST_F(CliTest, BenchWritesScalingCsv) {
    const auto r = run({"bench", "--n-list", "200,400", "--out", path("scaling.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(path("scaling.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].front(), "n");
    EXPECT_EQ(rows[1][0], "200");
    EXPECT_EQ(rows[2][0], "400");
}

TEST_F(CliTest, GenerateIsDeterministic) {
    ASSERT_EQ(run({"generate", "--n", "64", "--seed", "9", "--out", path("a.csv")}).code, 0);
    ASSERT_EQ(run({"generate", "--n", "64", "--seed", "9", "--out", path("b.csv")}).code, 0);
    ASSERT_EQ(run({"generate", "--n", "64", "--seed", "10", "--out", path("c.csv")}).code, 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

TEST_F(CliTest, MulticlassTrainPredict) {
    ASSERT_EQ(run({"generate", "--n", "240", "--clusters", "3", "--sigma", "0.3", "--out", path("mc.csv")}).code, 0);
    const auto tr = run({"train", "--data", path("mc.csv"), "--model", path("m"), "--test", path("mc.csv"), "--h",
                         "1", "--lambda", "1e-2", "--tol", "1e-4"});
    ASSERT_EQ(tr.code, 0) << tr.err;
    const json r = json::parse(slurp(path("m") + "/report.json"));
    EXPECT_GE(r.at("accuracy").get<double>(), 0.99);
}

} // namespace

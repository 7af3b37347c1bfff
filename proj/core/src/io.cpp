#include "hik/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hik {

namespace fs = std::filesystem;
using nlohmann::json;

json tree_to_json(const ClusterTree& tree) {
    json nodes = json::array();
    for (const auto& nd : tree.nodes())
        nodes.push_back({{"b", nd.range.begin}, {"e", nd.range.end}, {"l", nd.left}, {"r", nd.right}});
    return {{"leaf_size", tree.leaf_size()}, {"perm", tree.perm()}, {"nodes", std::move(nodes)}};
}

ClusterTree tree_from_json(const json& j) {
    std::vector<ClusterNode> nodes;
    for (const auto& nd : j.at("nodes")) {
        ClusterNode c;
        c.range = {nd.at("b").get<Index>(), nd.at("e").get<Index>()};
        c.left = nd.at("l").get<Index>();
        c.right = nd.at("r").get<Index>();
        nodes.push_back(c);
    }
    ClusterTree tree(std::move(nodes), j.at("perm").get<std::vector<Index>>(), j.at("leaf_size").get<Index>());
    tree.check_invariants();
    return tree;
}

void write_f64_le(const fs::path& path, std::span<const double> values) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    for (double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i)
            buf[i] = static_cast<unsigned char>(bits >> (8 * i));
        out.write(reinterpret_cast<const char*>(buf), 8);
    }
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> read_f64_le(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 8 != 0)
        throw std::runtime_error(path.string() + ": size is not a multiple of 8 bytes");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 * k + i])) << (8 * i);
        out[k] = std::bit_cast<double>(bits);
    }
    return out;
}

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    return json::parse(in);
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace

void save_model(const fs::path& dir, const StoredModel& m) {
    fs::create_directories(dir);
    const auto& mm = m.model;
    json meta = {{"format", "hik-model"},
                 {"version", 1},
                 {"binary", m.binary},
                 {"n", mm.train_points.rows()},
                 {"d", mm.train_points.cols()},
                 {"classes", mm.w.cols()},
                 {"h", mm.cfg.h},
                 {"lambda", mm.cfg.lambda},
                 {"solver_tol", mm.solver_tol},
                 {"extra", m.extra}};
    if (m.norm)
        meta["normalization"] = {{"mean", vec_json(m.norm->mean)}, {"std", vec_json(m.norm->std)}};
    if (m.positive_class)
        meta["positive_class"] = *m.positive_class;
    write_json(dir / "model.json", meta);
    write_json(dir / "tree.json", tree_to_json(mm.tree));
    write_f64_le(dir / "weights.bin", {mm.w.data(), static_cast<std::size_t>(mm.w.size())});
    write_f64_le(dir / "points.bin", {mm.train_points.data(), static_cast<std::size_t>(mm.train_points.size())});
}

StoredModel load_model(const fs::path& dir) {
    const json meta = read_json(dir / "model.json");
    if (meta.value("format", "") != "hik-model")
        throw std::runtime_error(dir.string() + " is not a model directory");
    StoredModel m;
    m.binary = meta.at("binary").get<bool>();
    const Index n = meta.at("n").get<Index>();
    const Index d = meta.at("d").get<Index>();
    const Index c = meta.at("classes").get<Index>();
    auto& mm = m.model;
    mm.cfg.h = meta.at("h").get<double>();
    mm.cfg.lambda = meta.at("lambda").get<double>();
    mm.solver_tol = meta.value("solver_tol", 0.0);
    mm.tree = tree_from_json(read_json(dir / "tree.json"));
    if (mm.tree.n() != n)
        throw std::runtime_error("tree size does not match model");
    const auto w = read_f64_le(dir / "weights.bin");
    const auto p = read_f64_le(dir / "points.bin");
    if (static_cast<Index>(w.size()) != n * c || static_cast<Index>(p.size()) != n * d)
        throw std::runtime_error("model binaries have unexpected sizes");
    mm.w = Eigen::Map<const Matrix>(w.data(), n, c);
    mm.train_points = Eigen::Map<const PointMatrix>(p.data(), n, d);
    if (meta.contains("normalization"))
        m.norm = NormStats{json_vec(meta["normalization"].at("mean")), json_vec(meta["normalization"].at("std"))};
    if (meta.contains("positive_class"))
        m.positive_class = meta["positive_class"].get<int>();
    m.extra = meta.value("extra", json::object());
    return m;
}

json to_json(const MetricsReport& r) {
    json j = {{"schema_version", kMetricsSchemaVersion},
              {"dataset", r.dataset},
              {"n", r.n},
              {"d", r.d},
              {"method", r.method},
              {"solver", r.solver},
              {"h", r.h},
              {"lambda", r.lambda},
              {"tol", r.tol},
              {"leaf_size", r.leaf_size},
              {"levels", r.levels},
              {"memory_mb", r.memory_mb},
              {"max_rank", r.max_rank},
              {"timings",
               {{"hmatrix_s", r.t_hmatrix_s},
                {"compress_s", r.t_compress_s},
                {"sample_s", r.t_sample_s},
                {"factor_s", r.t_factor_s},
                {"solve_s", r.t_solve_s}}},
              {"accuracy", r.accuracy ? json(*r.accuracy) : json(nullptr)},
              {"seed", r.seed},
              {"flags", r.flags}};
    return j;
}

json hss_stats_json(const HssStats& s, double tol, Index leaf_size) {
    return {{"memory_mb", s.memory_mb()}, {"max_rank", s.max_rank}, {"tol", tol}, {"leaf_size", leaf_size},
            {"levels", s.level_count}};
}

} // namespace hik

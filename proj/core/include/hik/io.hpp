#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hik/cluster.hpp"
#include "hik/data.hpp"
#include "hik/krr.hpp"

namespace hik {

/// {leaf_size, perm:[...], nodes:[{b,e,l,r}...]}; absent children are -1.
nlohmann::json tree_to_json(const ClusterTree& tree);
ClusterTree tree_from_json(const nlohmann::json& j);

/// Raw little-endian float64, no header.
void write_f64_le(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f64_le(const std::filesystem::path& path);

/// A trained model directory: model.json (config, shapes, normalization), tree.json,
/// weights.bin (n x c, column-major) and points.bin (n x d, row-major, tree order).
struct StoredModel {
    MulticlassModel model; ///< binary models are stored as a single column
    bool binary = true;
    std::optional<NormStats> norm;
    std::optional<int> positive_class;
    nlohmann::json extra; ///< free-form provenance (flags, seed)
};

void save_model(const std::filesystem::path& dir, const StoredModel& m);
StoredModel load_model(const std::filesystem::path& dir);

inline constexpr int kMetricsSchemaVersion = 1;

struct MetricsReport {
    std::string dataset;
    Index n = 0;
    Index d = 0;
    std::string method;
    std::string solver;
    double h = 0.0;
    double lambda = 0.0;
    double tol = 0.0;
    Index leaf_size = 16;
    Index levels = 0;
    double memory_mb = 0.0;
    Index max_rank = 0;
    double t_hmatrix_s = 0.0;
    double t_compress_s = 0.0;
    double t_sample_s = 0.0;
    double t_factor_s = 0.0;
    double t_solve_s = 0.0;
    std::optional<double> accuracy;
    std::uint64_t seed = 0;
    nlohmann::json flags = nlohmann::json::object();
};

nlohmann::json to_json(const MetricsReport& r);

/// {memory_mb, max_rank, tol, leaf_size, levels}
nlohmann::json hss_stats_json(const HssStats& s, double tol, Index leaf_size);

} // namespace hik

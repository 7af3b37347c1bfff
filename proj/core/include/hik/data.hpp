#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hik/types.hpp"

namespace hik {

/// n points in d dimensions, with optional integer labels. Labels are either
/// {-1,+1} for binary problems or class ids {0..c-1} for multiclass problems.
struct DataMatrix {
    PointMatrix points;
    std::optional<std::vector<int>> labels;

    Index n() const { return points.rows(); }
    Index d() const { return points.cols(); }
    bool has_labels() const { return labels.has_value(); }

    /// Throws std::invalid_argument on non-finite coordinates or a label count mismatch.
    void validate() const;
};

/// Per-column statistics from normalize_zscore. std uses the population convention
/// (divide by n). A zero std marks a constant column, which is centered but not scaled.
struct NormStats {
    Vector mean;
    Vector std;
};

enum class DataFormat { Csv, LibSvm };

DataFormat parse_format(const std::string& name);

/// The path itself if it exists, else $HIK_DATA_DIR/path for relative paths.
std::optional<std::filesystem::path> resolve_data_path(const std::filesystem::path& path);

/// Loads a CSV or LIBSVM file. Relative paths that do not exist are retried under
/// $HIK_DATA_DIR. For CSV, a non-numeric first row is treated as a header; the label
/// column (if any) is removed from the point coordinates. LIBSVM indices are 1-based
/// and missing features are zero.
DataMatrix load_dataset(const std::filesystem::path& path, DataFormat format,
                        std::optional<Index> label_column = std::nullopt);

/// Same parsers, reading from memory. Useful for tests and piped input.
DataMatrix parse_csv(const std::string& text, std::optional<Index> label_column = std::nullopt);
DataMatrix parse_libsvm(const std::string& text);

void write_csv(const std::filesystem::path& path, const DataMatrix& data);

std::pair<DataMatrix, NormStats> normalize_zscore(const DataMatrix& data);
DataMatrix apply_normalization(const DataMatrix& data, const NormStats& stats);

/// Shuffles rows with the given seed and cuts them into (train, val, test) by the
/// rounded fractions. Throws if any part would be empty.
std::array<DataMatrix, 3> split_dataset(const DataMatrix& data, std::array<double, 3> fractions,
                                        std::uint64_t seed);

DataMatrix select_rows(const DataMatrix& data, std::span<const Index> rows);

/// Relabels for one-vs-all: +1 where label == positive_class, -1 otherwise.
std::vector<int> one_vs_all_labels(std::span<const int> labels, int positive_class);

/// Number of classes for class-id labels (max id + 1). Throws on negative ids.
int class_count(std::span<const int> labels);

bool is_binary_pm1(std::span<const int> labels);

/// Isotropic Gaussian mixture: `clusters` centers drawn uniformly in
/// [-spread, spread]^d, each point a center plus N(0, sigma^2 I) noise. Labels are
/// cluster ids. Rows come out shuffled, so the natural order carries no geometry.
struct BlobSpec {
    Index n = 1000;
    Index d = 2;
    int clusters = 2;
    double spread = 10.0;
    double sigma = 1.0;
    std::uint64_t seed = 1;
};
DataMatrix make_blobs(const BlobSpec& spec);

} // namespace hik

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hik {

using Index = Eigen::Index;

/// Column-major dense matrix used for all factor storage and samples.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Point coordinates, one point per row. Row-major so a point is contiguous.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Half-open index range [begin, end).
struct IndexRange {
    Index begin = 0;
    Index end = 0;

    constexpr Index size() const { return end - begin; }
    constexpr bool empty() const { return end <= begin; }
    constexpr bool contains(Index i) const { return i >= begin && i < end; }
    friend constexpr bool operator==(const IndexRange&, const IndexRange&) = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Raised when a factorization or solve cannot proceed.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& msg, Index node = -1)
        : std::runtime_error(node >= 0 ? msg + " (node " + std::to_string(node) + ")" : msg), node_(node) {}

    Index node() const { return node_; }

private:
    Index node_;
};

constexpr std::size_t kEntryBytes = sizeof(double);

} // namespace hik

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hik/cluster.hpp"
#include "hik/data.hpp"
#include "hik/krr.hpp"

namespace hik {

/// Log-scale box for (h, lambda).
struct SearchSpace {
    double h_min = 0.1;
    double h_max = 10.0;
    double lambda_min = 0.01;
    double lambda_max = 10.0;
    Index h_points = 16;      ///< grid search only
    Index lambda_points = 16; ///< grid search only

    void validate() const;
};

struct TrialRecord {
    Index trial = 0;
    double h = 0.0;
    double lambda = 0.0;
    double validation_accuracy = 0.0;
    std::size_t memory_bytes = 0;
    Index max_rank = 0;
    double wall_time_s = 0.0;
    std::string error;
};

struct SearchResult {
    TrialRecord best;
    std::vector<TrialRecord> records;
    Index compressions = 0;   ///< kernels prepared (one per distinct h)
    Index factorizations = 0;
};

struct TuneContext {
    const DataMatrix* train = nullptr; ///< +-1 labels
    const DataMatrix* validation = nullptr;
    ClusterMethod method;
    SolverOptions solver;
};

/// Every (h, lambda) pair of a log-spaced grid. Each h is compressed once and all
/// lambdas reuse it. Ties go to the smaller lambda, then the smaller h.
SearchResult grid_search(const SearchSpace& space, const TuneContext& ctx);

struct BlackBoxOptions {
    Index budget = 100;
    std::uint64_t seed = 1;
    /// Cap on distinct h values (each costs one compression). 0 selects max(1, budget / 32).
    Index max_compressions = 0;
};

/// Budgeted search that treats h as expensive and lambda as cheap. The first half of
/// the budget is a Latin hypercube over (h-anchor stratum, log lambda); the rest
/// refines around the incumbent with Gaussian steps in log lambda (sigma halved on
/// non-improvement), spending leftover compressions on perturbed h values when the
/// lambda steps stall. Deterministic for a fixed seed.
SearchResult black_box_search(const SearchSpace& space, const BlackBoxOptions& opts, const TuneContext& ctx);

/// trial,h,lambda,acc,mem_mb,max_rank,time_s
void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
std::string trials_csv(const std::vector<TrialRecord>& records);

} // namespace hik

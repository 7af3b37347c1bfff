#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hik::testing {

/// One invariant checked for a seed. The check returns an empty string on success,
/// otherwise a description of the violation.
struct PropertyCase {
    std::string module;
    std::string name;
    std::function<std::string(std::uint64_t seed)> check;
};

const std::vector<PropertyCase>& property_suite();

inline constexpr std::uint64_t kPropertySeeds[] = {1, 2, 3, 4, 5};

struct ParityResult {
    double dense_accuracy;
    double hss_accuracy;
};

/// 10K train / 1K test on separable blobs with 5% label noise: test accuracy of the
/// dense solver and of HSS at tol 0.1.
ParityResult accuracy_parity_10k(std::uint64_t seed);

} // namespace hik::testing

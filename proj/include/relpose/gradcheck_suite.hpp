#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace relpose::loss {

struct SuiteEntry {
    std::string name;
    std::size_t points = 0;
    double max_rel_error = 0.0;
    bool passed = false;
};

// Central-finite-difference checks of every loss at random non-degenerate
// points (hinge boundaries and normalization singularities excluded by
// resampling).
std::vector<SuiteEntry> run_gradcheck_suite(std::size_t points_per_loss = 100,
                                            std::uint64_t seed = 0, double step = 1e-6,
                                            double tolerance = 1e-5);

}  // namespace relpose::loss

#pragma once

#include <string>
#include <vector>

#include "qsread/freq_grid.hpp"

namespace qsread {

/// Per-frequency deviation of one series from a reference, with a named
/// pass/fail threshold on the maximum relative deviation.
struct ComparisonReport {
    std::string label_a; // series under test
    std::string label_b; // reference
    std::vector<int> n_index;
    std::vector<double> abs_dev;
    std::vector<double> rel_dev; // |a-b| / |b|, absolute where |b| underflows
    double max_abs = 0.0, mean_abs = 0.0;
    double max_rel = 0.0, mean_rel = 0.0;
    std::string tolerance_name;
    double tolerance = 0.0;
    bool pass = false;
};

ComparisonReport compare_series(const CorrelatorSeries& a, const CorrelatorSeries& b,
                                const std::string& tolerance_name, double tolerance);

} // namespace qsread

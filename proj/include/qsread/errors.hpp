#pragma once

#include <stdexcept>
#include <string>

namespace qsread {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parameter outside its mathematical domain (beta <= 0, tau out of range, ...).
struct domain_error : error {
    using error::error;
};

/// Operator statistics do not match the grid statistics.
struct statistics_error : error {
    using error::error;
};

/// Tau mesh too coarse for the requested frequency range.
struct resolution_error : error {
    using error::error;
};

/// Dyson resummation too close to a pole of the geometric series.
struct pole_error : error {
    using error::error;
};

/// Extraction undefined (lambda = 0) or a correlator value is numerically zero.
struct extraction_error : error {
    using error::error;
};

/// Hilbert-space dimension exceeds the configured budget.
struct dimension_error : error {
    using error::error;
};

/// Truncation convergence check failed.
struct convergence_error : error {
    using error::error;
};

/// Analytic continuation fit or evaluation failure.
struct continuation_error : error {
    using error::error;
};

/// Scenario configuration schema violation.
struct config_error : error {
    using error::error;
};

} // namespace qsread

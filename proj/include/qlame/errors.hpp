#pragma once

#include <stdexcept>
#include <string>

namespace qlame {

// A truncated series ran out of terms, or an iteration ran out of steps.
struct NonConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation requested too close to a pole / lattice zero.
struct PoleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Not enough usable data points for a fit.
struct InsufficientSamplesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Least-squares system is numerically rank deficient.
struct RankDeficiencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qlame

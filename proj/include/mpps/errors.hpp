#pragma once

#include <stdexcept>
#include <string>

namespace mpps {

// Channel/embedding is numerically rank deficient.
struct DegenerateChannelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric differences imply a non-positive curvature; no Gaussian fits.
struct NonConvexFitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Too few usable metric samples for a moment fit.
struct InsufficientSamplesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A metric row with no present entries.
struct EmptyRowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exhaustive enumeration would exceed the configured guard.
struct EnumerationTooLargeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or wrong-version model file.
struct ModelFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingDivergedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mpps

#pragma once

#include <stdexcept>
#include <string>

namespace formguard {

/// Shape mismatch between operands (non-square input, incompatible blocks, ...).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation (NaN entries, Ts <= 0, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Observer gain design failed: (Ad, Cd) is not detectable, or the fixed gain
/// fails the stability post-check in some communication mode.
struct DetectabilityError : std::runtime_error {
    explicit DetectabilityError(const std::string& what, int mode = -1)
        : std::runtime_error(what), offending_mode(mode) {}
    int offending_mode;  // -1 when not tied to a specific mode
};

/// The pencil has no usable positive-rate stealthy direction.
struct ZeroDynamicsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Scenario file rejected; message carries file, section and key context.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace formguard

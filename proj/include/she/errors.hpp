#pragma once

#include <stdexcept>
#include <string>

namespace she {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Configuration / input validation problems (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Numeric evaluation problems (CLI exit code 3).
struct NumericError : Error {
    using Error::Error;
};

struct SingularAtOrigin : NumericError {
    using NumericError::NumericError;
};
struct NotPointwise : NumericError {
    using NumericError::NumericError;
};
struct NonpositiveTime : ConfigError {
    using ConfigError::ConfigError;
};
struct DivergentIntegral : NumericError {
    using NumericError::NumericError;
};
struct QuadratureFailure : NumericError {
    using NumericError::NumericError;
};

/// Carries the best estimate and its error bound when the tolerance target
/// was missed.
struct ToleranceNotMet : NumericError {
    double estimate;
    double error_bound;
    ToleranceNotMet(const std::string& msg, double est, double err)
        : NumericError(msg), estimate(est), error_bound(err) {}
};

struct GridMismatch : ConfigError {
    using ConfigError::ConfigError;
};
struct NonconvergentSeries : NumericError {
    using NumericError::NumericError;
};

struct TruncationNotConverged : NumericError {
    double partial_value;
    double tail_bound;
    TruncationNotConverged(const std::string& msg, double value, double bound)
        : NumericError(msg), partial_value(value), tail_bound(bound) {}
};

/// Raised when a truncated spatial box leaks non-negligible mass through
/// its boundary; the computed value is attached.
struct TruncationWarning : NumericError {
    double boundary_mass;
    TruncationWarning(const std::string& msg, double mass)
        : NumericError(msg), boundary_mass(mass) {}
};

struct InconsistentLimits : NumericError {
    using NumericError::NumericError;
};
struct EquivalenceViolation : NumericError {
    using NumericError::NumericError;
};
struct BoundViolated : NumericError {
    using NumericError::NumericError;
};
struct MissingExpMoment : ConfigError {
    using ConfigError::ConfigError;
};
struct UnsupportedMeasure : ConfigError {
    using ConfigError::ConfigError;
};
struct IndefiniteCovariance : NumericError {
    using NumericError::NumericError;
};
struct StabilityViolated : ConfigError {
    using ConfigError::ConfigError;
};
struct NaNDetected : NumericError {
    using NumericError::NumericError;
};
struct SlopeNotStabilized : NumericError {
    using NumericError::NumericError;
};

} // namespace she

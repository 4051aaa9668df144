#pragma once

#include <stdexcept>
#include <string>

namespace mmfg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed scenario/report file.
struct ParseError : Error {
    using Error::Error;
};

/// A scenario invariant is violated; the message names the offending table/row.
struct ValidationError : Error {
    using Error::Error;
};

/// Feature vector outside the declared feature box.
struct FeatureOutOfRange : Error {
    using Error::Error;
};

/// Node budget exceeded while materializing the trajectory tree.
struct CapacityError : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

/// Simplex did not terminate within the iteration cap.
struct NumericalFailure : Error {
    using Error::Error;
};

/// Occupation flow violates its balance constraints beyond tolerance.
struct InfeasibleFlow : Error {
    using Error::Error;
};

/// Joint mass exceeds the major marginal at some node.
struct MassMismatch : Error {
    using Error::Error;
};

struct NonFiniteValue : Error {
    using Error::Error;
};

}  // namespace mmfg

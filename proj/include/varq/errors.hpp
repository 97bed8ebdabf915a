#pragma once

#include <stdexcept>
#include <string>

namespace varq {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input data (.tbl parsing, bad field text).
struct DataError : Error {
    using Error::Error;
};

/// Plan/expression failed validation against a schema.
struct ValidateError : Error {
    using Error::Error;
};

/// Runtime expression evaluation failure (division by zero, ...).
struct EvalError : Error {
    using Error::Error;
};

/// Bad configuration (scale factor, benchmark parameters, ...).
struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace varq

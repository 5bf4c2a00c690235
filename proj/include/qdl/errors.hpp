#pragma once

#include <stdexcept>
#include <string>

namespace qdl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operands of incompatible dimension (matrix sizes, control counts, ...).
struct DimensionError : Error {
    using Error::Error;
};

// Non-finite values, division by zero, diverged integrations.
struct NumericError : Error {
    using Error::Error;
};

struct IndexError : Error {
    using Error::Error;
};

// Time outside a control schedule's domain.
struct ScheduleError : Error {
    using Error::Error;
};

// Every run of a multi-start optimization failed.
struct SwarmError : Error {
    using Error::Error;
};

// Bad config file / bad command-line arguments.
struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace qdl

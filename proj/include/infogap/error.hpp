#pragma once
// Error taxonomy. Every throwing precondition in the library maps to one of
// these types so callers (and the CLI) can translate failures uniformly.

#include <stdexcept>
#include <string>

namespace infogap {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched or non-square shapes (matrices, model inputs/outputs).
struct DimensionError : Error {
    using Error::Error;
};

// Non-finite values, NaNs, corrupt or unparseable payloads.
struct DataError : Error {
    using Error::Error;
};

// Structural invariants violated (row sums, volumes, marginals).
struct ValidationError : Error {
    using Error::Error;
};

// Unknown symbols, out-of-range indices, malformed call arguments.
struct ArgumentError : Error {
    using Error::Error;
};

// Mathematical domain violations (nonpositive where positive required).
struct DomainError : Error {
    using Error::Error;
};

// Bad run configuration (unknown keys, unstable step sizes). CLI exit 2.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace infogap

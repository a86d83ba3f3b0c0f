#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace meshact {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument to an operation (invalid permutation, k too large, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Malformed file content. Carries the byte offset where parsing failed.
struct FormatError : Error {
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// Tensor shape mismatch, raised at op call time.
struct ShapeError : Error {
    using Error::Error;
};

// Non-finite value produced by a forward op.
struct NumericError : Error {
    using Error::Error;
};

// Invalid run configuration.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace meshact

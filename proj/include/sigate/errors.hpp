#pragma once

#include <stdexcept>
#include <string>

namespace sigate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Two donors sit on top of each other; the exchange integral is undefined.
class SingularConfigurationError : public Error {
public:
    using Error::Error;
};

class UnsupportedDimensionError : public Error {
public:
    explicit UnsupportedDimensionError(int dim)
        : Error("unsupported dimension " + std::to_string(dim) + " (expected 2 or 3)") {}
};

/// No node of an interaction map exceeds the threshold.
class EmptyZoneError : public Error {
public:
    using Error::Error;
};

class ClusterTooLargeError : public Error {
public:
    using Error::Error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw PreconditionError(message);
}

}  // namespace sigate

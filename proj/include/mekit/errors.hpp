#pragma once

#include <stdexcept>
#include <string>

namespace mekit {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape mismatch or non-square input where a square matrix is required.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Singular matrix, shared spectrum or evaluation at a pole.
class SingularityError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain (negative time, branch cut).
class DomainError : public Error {
public:
    using Error::Error;
};

// Parameters that do not describe a valid distribution or channel.
class ConstructionError : public Error {
public:
    using Error::Error;
};

// A documented precondition of the operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Result would exceed the configured maximum degree.
class DegreeLimitError : public Error {
public:
    using Error::Error;
};

} // namespace mekit

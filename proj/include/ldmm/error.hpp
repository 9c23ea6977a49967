#pragma once

#include <stdexcept>
#include <string>

namespace ldmm {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Coordinate, ordinal or patch element out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Shapes of two operands disagree (field vs mask, patch vs cube, ...).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Iterative solve stopped before reaching its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Linear system has a block that no sampled voxel constrains.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated file.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace ldmm

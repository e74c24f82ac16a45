#pragma once

#include <stdexcept>
#include <string>

namespace tccs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor or matrix dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid user-supplied parameter (rank, probability, index set size, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Quantity undefined for the given input (e.g. PSNR against a zero tensor).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Failure inside a numerical kernel (SVD non-convergence, imaginary residue).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Iterative solver blew up.
class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Filesystem trouble.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed tensor or plan file. Carries the byte offset where parsing stopped.
class ParseError : public IoError {
public:
    ParseError(const std::string& what, std::size_t offset)
        : IoError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace tccs

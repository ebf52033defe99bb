#pragma once

#include <stdexcept>
#include <string>

namespace vpgd {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Coordinate or time outside the problem domain, or mismatched horizons.
class DomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class MeshError : public Error {
public:
    using Error::Error;
};

/// Linear system without a unique solution (e.g. no clamped node).
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// NaN/Inf produced during a solve.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; carries the offending line (1-based, 0 if unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace vpgd

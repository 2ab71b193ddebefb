#pragma once

#include <stdexcept>
#include <string>

namespace pirum {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Outcome outside the utility family's support, or an invalid parameter.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed lottery, probability vector or argument.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Root finder or optimizer failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// More than one indifference crossing where exactly one was required.
class AmbiguityError : public Error {
public:
    using Error::Error;
};

/// Random parameter model asked for a pair it has no orientation for.
class OrientationError : public Error {
public:
    using Error::Error;
};

/// Text input could not be parsed. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A subject's set of answered questions matches no known question set.
class CoverageError : public Error {
public:
    using Error::Error;
};

}  // namespace pirum

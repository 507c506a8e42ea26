#pragma once

#include <stdexcept>
#include <string>

namespace xfercast {

/// Base class for all xfercast failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text: wrong field count, unparseable field.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally valid input that violates a record invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Bad configuration: unknown key, illegal predictor spec, out-of-range option.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller passed inconsistent arguments (length mismatch, missing variable).
class InputError : public Error {
public:
    using Error::Error;
};

/// Not enough observations to compute the requested quantity.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Data admits no unique answer: zero variance, rank-deficient design.
class DegenerateError : public Error {
public:
    using Error::Error;
};

}  // namespace xfercast

#pragma once

#include <stdexcept>
#include <string>

namespace vframe {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (manifest lines, image headers, CSV cells).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or arguments; the CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A contract violation detected on data (empty inputs, single-class labels, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// External process or network failure.
class ExternalError : public Error {
public:
    using Error::Error;
};

} // namespace vframe

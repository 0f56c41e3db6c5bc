#pragma once

#include <stdexcept>
#include <string>

namespace lorlut {

/// Base of every exception thrown by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands disagree in shape (image sizes, grid sizes, vector lengths).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument lies outside the accepted domain (G < 2, index out of range, ...).
class RangeError : public Error {
public:
    using Error::Error;
};

/// Malformed serialized input: .cube text, model files, image payloads.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A computation produced or received a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace lorlut

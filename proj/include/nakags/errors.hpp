#pragma once

#include <stdexcept>
#include <string>

namespace nakags {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter or precondition was violated by the caller.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Two inputs that must agree in shape (or channel count) do not.
class ShapeMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Geometry is too degenerate to solve (collinear centers, coincident points).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Malformed content in a file or JSON document.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Failure opening, reading, or writing a file.
class IoError : public Error {
public:
    enum class Direction { Read, Write };

    IoError(Direction direction, const std::string& what)
        : Error(what), direction_(direction) {}

    Direction direction() const noexcept { return direction_; }

private:
    Direction direction_;
};

}  // namespace nakags

#pragma once

#include <stdexcept>
#include <string>

namespace posyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant (shape, ordering, range).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, parsed, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// A numerical routine was asked to do something it cannot (Nyquist
/// violation, infeasible force, degenerate geometry, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace posyn

#pragma once

#include <stdexcept>
#include <string>

namespace ptflat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or type invariant.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Well-formed request that the library deliberately does not support
/// (e.g. closed-form bands for a lattice that has none).
class Unsupported : public Error {
public:
    using Error::Error;
};

/// An iterative numerical routine stopped before meeting its criterion.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

} // namespace ptflat

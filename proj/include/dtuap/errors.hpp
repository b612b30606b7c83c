#pragma once

#include <stdexcept>
#include <string>

namespace dtuap {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad CLI flags, malformed config, out-of-range class ids. Exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

// Unreadable or malformed data files (IDX, CIFAR, checkpoints, DTAP). Exit code 3.
class DataError : public Error {
public:
    using Error::Error;
};

// Numeric failure: divergence, non-finite loss, internal shape violations. Exit code 4.
class NumericError : public Error {
public:
    using Error::Error;
};

// Incompatible tensor shapes fed to an operation; message names the
// operation and the offending dimensions.
class ShapeError : public NumericError {
public:
    using NumericError::NumericError;
};

} // namespace dtuap

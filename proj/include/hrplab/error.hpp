#pragma once

#include <stdexcept>
#include <string>

namespace hrplab {

// Every failure raised by the library derives from Error. The three leaves map
// onto the CLI exit codes (1, 2, 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept = 0;
};

// Bad arguments or configuration.
class ValidationError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

// Malformed or insufficient input data.
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

// Singular matrices, degenerate normalizations, wiped-out wealth.
class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

}  // namespace hrplab

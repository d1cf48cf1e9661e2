#pragma once

#include <stdexcept>
#include <string>

namespace cost {

// Every failure raised by the library derives from Error so callers can map
// categories onto exit codes without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class UnderdeterminedError : public NumericError {
public:
    using NumericError::NumericError;
};

class SingularMatrixError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateVarianceError : public NumericError {
public:
    using NumericError::NumericError;
};

class HarnessError : public Error {
public:
    using Error::Error;
};

}  // namespace cost

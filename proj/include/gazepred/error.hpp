#pragma once

#include <stdexcept>
#include <string>

namespace gazepred {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, numeric 4, io 5.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Tensor/layer dimension contract violations.
class ShapeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DataError : public Error {
public:
    using Error::Error;
};

// Malformed file contents (bad header, truncated blob, version skew).
class FormatError : public DataError {
public:
    using DataError::DataError;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace gazepred

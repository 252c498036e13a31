#ifndef PINSITE_ERRORS_HPP
#define PINSITE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pinsite {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid block/model/run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Mathematically invalid input (empty reduction, single-class ROC, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Dataset layout or content problem.
class DataError : public Error {
public:
    using Error::Error;
};

/// File read/write failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed serialized payload (bad magic, CRC mismatch, truncation).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Non-finite value where the numeric contract forbids one.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace pinsite

#endif

/**
 * @file error.hpp
 * @brief Exception hierarchy shared by every lakedo module.
 *
 * The CLI maps these onto exit codes: NumericalError -> 3, everything
 * else derived from Error -> 2.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lakedo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A required column or field is missing from an input file.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Dates are not strictly increasing with unit spacing.
class OrderingError : public Error {
public:
    using Error::Error;
};

/// A value lies outside the domain of the operation (non-positive volume,
/// non-finite input, violated precondition).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: bad field value, unknown key, wrong schema version.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Training diverged (non-finite loss).
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, std::size_t epoch)
        : Error(what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace lakedo

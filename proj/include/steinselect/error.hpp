#pragma once

#include <stdexcept>
#include <string>

namespace steinselect {

/// Base for every error the library raises. The CLI maps the subclasses onto
/// exit codes (validation 2, numerical 3, iteration limit 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: schema, parse, configuration and dimension problems.
class ValidationError : public Error {
public:
    using Error::Error;
};

class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t row, std::string column)
        : ValidationError(what), row_(row), column_(std::move(column)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Numerical failure: singular covariance, degenerate input, divergence.
class NumericalError : public Error {
public:
    using Error::Error;
};

class RankError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateInputError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, long step) : NumericalError(what), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

/// Eigengap threshold rule found no gap above tau.
class NoGapError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace steinselect

#pragma once

#include <stdexcept>
#include <string>

namespace aml {

/// Error categories; the CLI maps them to exit codes
/// (config = 2, data = 3, degeneracy = 4).
enum class ErrorKind { Config, Data, Degeneracy };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Invalid parameters, malformed config files, values outside a model's support.
class ConfigError : public Error {
public:
    explicit ConfigError(std::string m) : Error(ErrorKind::Config, std::move(m)) {}
};

/// I/O failures and unusable inputs (unreadable file, empty source).
class DataError : public Error {
public:
    explicit DataError(std::string m) : Error(ErrorKind::Data, std::move(m)) {}
};

/// Statistical degeneracies: the computation is well-posed but the data
/// cannot support the requested estimate.
class DegeneracyError : public Error {
public:
    explicit DegeneracyError(std::string m) : Error(ErrorKind::Degeneracy, std::move(m)) {}
};

/// No observation strictly exceeds the threshold u.
class NoExceedancesError : public DegeneracyError {
public:
    explicit NoExceedancesError(std::string m) : DegeneracyError(std::move(m)) {}
};

/// Moment or PWM statistics collapsed (identical exceedances, b0 <= 2*b1, ...).
class DegenerateStatisticError : public DegeneracyError {
public:
    explicit DegenerateStatisticError(std::string m) : DegeneracyError(std::move(m)) {}
};

/// Requested tail level tau is not below the estimated exceedance probability.
class TauTooLargeError : public DegeneracyError {
public:
    explicit TauTooLargeError(std::string m) : DegeneracyError(std::move(m)) {}
};

} // namespace aml

#pragma once

#include <stdexcept>
#include <string>

namespace regulab {

/// Malformed or inconsistent configuration / input data (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A structural assumption of the method is violated (CLI exit code 3).
/// The message names the assumption (e.g. "Assumption 7").
class AssumptionError : public std::runtime_error {
public:
    explicit AssumptionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: divergence, non-convergence, singular solve (CLI exit code 4).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace regulab

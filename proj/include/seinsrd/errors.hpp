#pragma once

#include <stdexcept>
#include <string>

namespace seinsrd {

// Error categories map one-to-one onto CLI exit codes (1, 2, 3).

/// Invalid configuration, unknown keys, bad flags or violated preconditions.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent observation data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solver failures: step-size underflow, non-finite state, failed fits.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, double time = 0.0)
        : std::runtime_error(what), time_(time) {}

    /// Model time (days) at which the failure was detected, when meaningful.
    double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace seinsrd

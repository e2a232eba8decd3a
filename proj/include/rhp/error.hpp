#pragma once

#include <stdexcept>
#include <string>

namespace rhp {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature could not reach the requested tolerance.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double estimate)
        : Error(what), estimate_(estimate) {}
    double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

/// Building a differential failed (singular period matrix, pole collision).
class ConstructionError : public Error {
public:
    using Error::Error;
};

/// Period-map inversion did not reach its tolerance.
class InversionError : public Error {
public:
    InversionError(const std::string& what, double best_residual)
        : Error(what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

/// Malformed or inconsistent problem configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace rhp

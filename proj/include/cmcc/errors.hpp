#pragma once

#include <stdexcept>
#include <string>

namespace cmcc {

// Base for every error raised by the library. `code()` is the stable
// machine-readable tag printed by the CLI.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* code() const noexcept = 0;
};

class DimensionError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "dimension"; }
};

class ConstraintRankError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "constraint-rank"; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "config"; }
};

class InputError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "input"; }
};

// Raised when a moment or prediction needs a finite noise variance that the
// model does not have (Cauchy, alpha-stable with alpha < 2).
class InfiniteMomentError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "theory-inapplicable"; }
};

// Step size at or beyond the mean-square stability edge.
class InstabilityError : public Error {
public:
    explicit InstabilityError(const std::string& what, double bound = 0.0)
        : Error(what), bound_(bound) {}
    const char* code() const noexcept override { return "unstable"; }
    double bound() const noexcept { return bound_; }

private:
    double bound_;
};

} // namespace cmcc

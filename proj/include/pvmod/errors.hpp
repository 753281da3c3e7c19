#ifndef PVMOD_ERRORS_HPP
#define PVMOD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pvmod {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid construction arguments, preconditions, or CLI usage.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Malformed input documents (CSV rows, JSON model files).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Bad observation data (non-finite targets, under-determined fits).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Diode exponent exceeded the configured cap; raised instead of
// letting a non-finite value propagate through the arithmetic.
class SaturationError : public Error {
public:
    SaturationError(const std::string& msg, double exponent)
        : Error(msg), exponent_(exponent) {}
    double exponent() const { return exponent_; }

private:
    double exponent_;
};

// Root finding failed; carries the last bracket for diagnostics.
class SolverError : public Error {
public:
    SolverError(const std::string& msg, double bracket_lo, double bracket_hi)
        : Error(msg), lo_(bracket_lo), hi_(bracket_hi) {}
    double bracket_lo() const { return lo_; }
    double bracket_hi() const { return hi_; }

private:
    double lo_;
    double hi_;
};

} // namespace pvmod

#endif

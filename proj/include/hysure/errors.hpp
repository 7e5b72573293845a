#pragma once

#include <stdexcept>
#include <string>

namespace hysure {

/// Bad arguments, malformed configuration, shape mismatches. Exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Singular systems, divergence, non-finite values. Exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// File format and filesystem failures. Exit code 4.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hysure

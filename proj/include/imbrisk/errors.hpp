#pragma once

#include <stdexcept>
#include <string>

namespace imbrisk {

/// Bad or malformed input data (unreadable CSV, non-binary target, ...).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration or usage.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric failure (non-finite values, optimizer breakdown, ...).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace imbrisk

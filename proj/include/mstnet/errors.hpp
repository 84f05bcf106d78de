#pragma once

#include <stdexcept>
#include <string>

namespace mstnet {

// Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Maps to CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or axis mismatch between tensors.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Target cannot be aligned within the available time steps.
struct InfeasibleTargetError : DataError {
    explicit InfeasibleTargetError(const std::string& msg) : DataError(msg) {}
};

// Maps to CLI exit code 4.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mstnet

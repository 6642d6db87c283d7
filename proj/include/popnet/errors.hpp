#pragma once

#include <stdexcept>
#include <string>

namespace popnet {

// Bad arguments or violated operation preconditions (CLI maps these to exit 1).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing/malformed files, incompatible checkpoints, empty datasets (exit 2).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses, failed gradient checks (exit 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace popnet

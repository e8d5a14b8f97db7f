#pragma once

#include <stdexcept>
#include <string>

namespace gxe {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or violated precondition. The CLI maps these to
// exit code 1.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Bad input data or a runtime failure (I/O, parse, infeasible state found
// in data). The CLI maps these to exit code 2.
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

}  // namespace gxe

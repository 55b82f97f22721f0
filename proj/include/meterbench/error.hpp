#pragma once

#include <stdexcept>
#include <string>

namespace meterbench {

// Bad configuration, unknown preset, invalid CLI usage. CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Input data violates a schema or invariant. CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A bug or broken environment. CLI exit code 3.
class InternalError : public std::runtime_error {
public:
    explicit InternalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace meterbench

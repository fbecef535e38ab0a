#pragma once

#include <stdexcept>
#include <string>

namespace dolce {

// Error taxonomy mirrors the CLI exit codes: input 1, capacity 2, observer 3.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : InputError {
    explicit ConfigError(const std::string& msg) : InputError(msg) {}
};

struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ObserverError : std::runtime_error {
    explicit ObserverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dolce

#pragma once

#include <stdexcept>
#include <string>

namespace ctgsm {

// Error taxonomy mirrors CLI exit codes: ConfigError -> 1, DataError -> 2,
// TrainingError -> 3.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ctgsm

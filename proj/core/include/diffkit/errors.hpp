#pragma once

#include <stdexcept>
#include <string>

namespace diffkit {

// Raised by RunConfig parsing/validation; carries the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error("config field '" + field + "': " + message),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Raised when an optimization run produces non-finite loss.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised on malformed tensor/checkpoint files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace diffkit

#pragma once

#include <stdexcept>
#include <string>

namespace mechanic {

// Raised by file readers (datasets, CSV) with a line number in the message.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// Raised by config parsing / schema validation. Maps to exit code 2 in the CLI.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a run trips the divergence guard. Maps to exit code 3 in the CLI.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mechanic

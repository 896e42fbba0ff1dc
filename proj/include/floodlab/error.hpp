#pragma once

#include <stdexcept>
#include <string>

namespace floodlab {

// Base for all pipeline errors. CLI maps these to exit code 2,
// usage problems to exit code 1.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Malformed row in a capture file; carries the 1-based line number.
struct RowError : Error {
    RowError(std::size_t line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line_number(line) {}
    std::size_t line_number;
};

struct OrderError : Error {
    explicit OrderError(const std::string& msg) : Error(msg) {}
};

struct InsufficientData : Error {
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct DegenerateData : Error {
    explicit DegenerateData(const std::string& msg) : Error(msg) {}
};

}  // namespace floodlab

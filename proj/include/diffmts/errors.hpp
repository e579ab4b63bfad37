#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diffmts {

// Error taxonomy. Each exception maps to one CLI exit class:
// validation/config/shape/index -> 3, format/parse/io/version -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IndexError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct GraphError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Malformed file contents; carries the byte offset where decoding failed.
struct FormatError : Error {
    explicit FormatError(const std::string& msg, std::size_t offset = 0)
        : Error(msg + " (offset " + std::to_string(offset) + ")"), offset(offset) {}
    std::size_t offset;
};

struct ParseError : Error {
    using Error::Error;
};

struct VersionError : Error {
    using Error::Error;
};

}  // namespace diffmts

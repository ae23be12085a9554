#pragma once

#include <stdexcept>
#include <string>

namespace scanviz {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParamError : Error {
    using Error::Error;
};
struct LayoutError : Error {
    using Error::Error;
};
struct BoundsError : Error {
    using Error::Error;
};
struct StateError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct TrainingError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct ServiceError : Error {
    using Error::Error;
};
struct EmptyInputError : Error {
    using Error::Error;
};

// Parse failures carry the position (byte offset within the offending line,
// or line number for file-level parsers).
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (at offset " + std::to_string(offset) + ")"), offset(offset) {}
    std::size_t offset;
};

}  // namespace scanviz

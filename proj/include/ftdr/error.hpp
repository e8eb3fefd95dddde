#pragma once

#include <stdexcept>
#include <string>

namespace ftdr {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/axis mismatches. Messages name the offending axis where known.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Violated operation contract (non-scalar loss, non-binary mask, ...).
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Malformed input files. Carries the byte offset where parsing failed.
struct ParseError : Error {
    ParseError(const std::string& msg, long offset)
        : Error(msg + " (byte offset " + std::to_string(offset) + ")"), byte_offset(offset) {}
    long byte_offset;
};

}  // namespace ftdr

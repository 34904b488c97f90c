#pragma once

#include <stdexcept>
#include <string>

namespace legalir {

/// Base error for all library failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid byte sequence while decoding text; carries the byte offset.
class DecodeError : public Error {
public:
    DecodeError(std::size_t byte_offset, const std::string& detail)
        : Error("invalid UTF-8 at byte offset " + std::to_string(byte_offset) + ": " + detail),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

}  // namespace legalir

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace elemantra {

// Precondition violated by caller-supplied data.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent configuration (parameter ranges, cross-field constraints).
class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or truncated file. Carries the byte offset where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace elemantra

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evdiff {

// Exit-code taxonomy used by the CLI: 1 = usage, 2 = data/validation.
// Library code throws; only the CLI maps exceptions to exit codes.

// Malformed input data: bad magic, truncated payload, unparsable record.
// Carries the location (byte offset or record index) that triggered it.
class FormatError : public std::runtime_error {
public:
    FormatError(std::string file, std::uint64_t offset, const std::string& what)
        : std::runtime_error(file + ": " + what + " (offset " + std::to_string(offset) + ")"),
          file_(std::move(file)),
          offset_(offset) {}

    const std::string& file() const { return file_; }
    std::uint64_t offset() const { return offset_; }

private:
    std::string file_;
    std::uint64_t offset_;
};

// Structurally valid input that violates a domain invariant (out-of-bounds
// coordinate, non-monotone timestamp, parameter outside its domain).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Shape/extent mismatches and empty-dims preconditions.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evdiff

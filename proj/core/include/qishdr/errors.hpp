#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qishdr {

/// Invalid argument to a numerical routine (negative rates, NaN inputs, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent data in a file being read or written.
/// Carries the byte offset at which the problem was detected when known.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what, std::size_t byte_offset = npos)
        : std::runtime_error(byte_offset == npos
                                 ? what
                                 : what + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    [[nodiscard]] std::size_t byte_offset() const noexcept { return byte_offset_; }
    [[nodiscard]] bool has_byte_offset() const noexcept { return byte_offset_ != npos; }

private:
    std::size_t byte_offset_;
};

/// Operating-system level I/O failure, with the offending path in the message.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qishdr

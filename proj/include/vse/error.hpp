#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vse {

/// Root of every error thrown by the library.
///
/// The three subclasses map onto the CLI exit codes: InvalidArgument is a
/// usage error (1), DataError covers malformed or inconsistent data (2) and
/// InternalError flags a broken invariant (3).
class Error : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter violates an operation's precondition
/// (k > N, nprobe out of range, D not divisible by m, ...).
class InvalidArgument : public Error {
 public:
    using Error::Error;
};

class DataError : public Error {
 public:
    using Error::Error;
};

class DimensionMismatch : public DataError {
 public:
    DimensionMismatch(std::size_t expected, std::size_t got)
            : DataError(
                      "dimension mismatch: expected " +
                      std::to_string(expected) + ", got " +
                      std::to_string(got)),
              expected_(expected),
              got_(got) {}

    std::size_t expected() const noexcept {
        return expected_;
    }
    std::size_t got() const noexcept {
        return got_;
    }

 private:
    std::size_t expected_;
    std::size_t got_;
};

enum class FormatErrorKind {
    BadMagic,
    BadVersion,
    BadHeader,
    Truncated,
    TrailingBytes,
    LabelCountMismatch,
    NonFinite,
    NotNormalized,
    Checksum,
    Inconsistent,
};

const char* to_string(FormatErrorKind kind) noexcept;

/// Malformed file content. `offset()` is the byte offset in the file at
/// which the problem was detected.
class FormatError : public DataError {
 public:
    FormatError(FormatErrorKind kind, const std::string& what,
                std::uint64_t offset)
            : DataError(
                      std::string(to_string(kind)) + " at byte offset " +
                      std::to_string(offset) + ": " + what),
              kind_(kind),
              offset_(offset) {}

    FormatErrorKind kind() const noexcept {
        return kind_;
    }
    std::uint64_t offset() const noexcept {
        return offset_;
    }

 private:
    FormatErrorKind kind_;
    std::uint64_t offset_;
};

class InternalError : public Error {
 public:
    using Error::Error;
};

#define VSE_THROW_IF_NOT(cond, ExcType, msg) \
    do {                                     \
        if (!(cond)) {                       \
            throw ExcType(msg);              \
        }                                    \
    } while (false)

} // namespace vse

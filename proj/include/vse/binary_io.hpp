#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "vse/error.hpp"

namespace vse {

using Bytes = std::vector<std::uint8_t>;

namespace detail {

template <typename T>
T byteswap_if_big_endian(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
        std::reverse(raw.begin(), raw.end());
        return std::bit_cast<T>(raw);
    } else {
        return v;
    }
}

} // namespace detail

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T v) {
        v = detail::byteswap_if_big_endian(v);
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }

    void put_f32s(std::span<const float> values) {
        if constexpr (std::endian::native == std::endian::little) {
            const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
            buf_.insert(buf_.end(), p, p + values.size_bytes());
        } else {
            for (float v : values) {
                put(v);
            }
        }
    }

    void put_bytes(std::span<const std::uint8_t> bytes) {
        buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    }

    void put_raw(std::string_view s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    std::size_t size() const noexcept {
        return buf_.size();
    }
    Bytes& bytes() noexcept {
        return buf_;
    }
    Bytes take() {
        return std::move(buf_);
    }

 private:
    Bytes buf_;
};

/// Cursor over a little-endian byte buffer. Running past the end throws a
/// FormatError(Truncated) carrying the offset of the failed read.
class ByteReader {
 public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get(const char* what) {
        require(sizeof(T), what);
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return detail::byteswap_if_big_endian(v);
    }

    /// Reads `n` floats; rejects NaN/inf with the offending offset.
    void get_f32s(std::span<float> out, const char* what);

    std::span<const std::uint8_t> get_bytes(std::size_t n, const char* what) {
        require(n, what);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t offset() const noexcept {
        return pos_;
    }
    std::size_t remaining() const noexcept {
        return data_.size() - pos_;
    }

    void require(std::size_t n, const char* what) const {
        if (data_.size() - pos_ < n) {
            throw FormatError(
                    FormatErrorKind::Truncated,
                    std::string("need ") + std::to_string(n) +
                            " bytes for " + what + ", only " +
                            std::to_string(data_.size() - pos_) + " remain",
                    pos_);
        }
    }

 private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

Bytes read_file(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

} // namespace vse

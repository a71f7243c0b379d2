#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vse/binary_io.hpp"
#include "vse/index_flat.hpp"
#include "vse/index_ivf_flat.hpp"
#include "vse/index_ivf_pq.hpp"

namespace vse {

enum class IndexKind : std::uint8_t {
    Flat = 0,
    IvfFlat = 1,
    IvfPq = 2,
};

std::string_view to_string(IndexKind kind) noexcept;
/// "flat", "ivf-flat" or "ivf-pq"; throws InvalidArgument otherwise.
IndexKind parse_index_kind(std::string_view name);

/// Build-time settings; nlist and m are ignored by kinds that do not use them.
struct IndexConfig {
    IndexKind kind = IndexKind::Flat;
    std::size_t nlist = 0;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    std::size_t max_iters = kDefaultKMeansIters;
};

/// Query-time settings. nprobe == 0 selects default_nprobe(nlist).
struct SearchParams {
    std::size_t k = 1;
    std::size_t nprobe = 0;
};

/// Any of the three index kinds behind one search surface.
class Index {
 public:
    using Variant = std::variant<FlatIndex, IvfFlatIndex, IvfPqIndex>;

    explicit Index(Variant v) : impl_(std::move(v)) {}

    static Index build(const EmbeddingSet& base, const IndexConfig& config);

    IndexKind kind() const noexcept {
        return static_cast<IndexKind>(impl_.index());
    }
    std::size_t dim() const;
    std::size_t size() const;
    /// 0 for flat indexes.
    std::size_t nlist() const;
    const std::vector<std::string>& labels() const;

    /// False when distances are ADC estimates.
    bool exact_distances() const noexcept {
        return kind() != IndexKind::IvfPq;
    }

    /// nprobe to use for `params` (resolves the 0 default).
    std::size_t effective_nprobe(const SearchParams& params) const;

    SearchResult search(VectorView query, const SearchParams& params) const;
    std::vector<SearchResult> search(MatrixView queries,
                                     const SearchParams& params) const;

    const Variant& variant() const noexcept {
        return impl_;
    }

 private:
    Variant impl_;
};

/// VIDX index file, little-endian:
///
///   "VIDX" | u32 version=1 | u8 kind | u32 dim | u64 count | payload |
///   labels | u64 CRC-64/XZ of all preceding bytes
///
/// Codebooks are written as u32 dim, u32 k, k*dim f32. Posting lists are
/// u32 nlist followed by, per list, u64 length and `length` runs of
/// (i64 id, payload) where payload is dim f32 (ivf-flat) or m code bytes
/// (ivf-pq). The flat payload is count*dim f32. The labels block is
/// count runs of (u32 byte length, UTF-8 bytes).
inline constexpr char kVidxMagic[4] = {'V', 'I', 'D', 'X'};
inline constexpr std::uint32_t kVidxVersion = 1;

/// CRC-64/XZ (ECMA-182 polynomial, reflected, init and xorout all ones).
std::uint64_t crc64(std::span<const std::uint8_t> bytes) noexcept;

Bytes encode_index(const Index& index);
Index decode_index(std::span<const std::uint8_t> bytes);

void save_index(const Index& index, const std::filesystem::path& path);
Index load_index(const std::filesystem::path& path);

} // namespace vse

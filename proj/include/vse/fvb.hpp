#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vse/binary_io.hpp"
#include "vse/vector.hpp"

namespace vse {

/// FVB embedding file, little-endian:
///
///   "FVB1" | u32 version=1 | u32 dim | u64 count | u8 normalized |
///   count*dim f32, row-major
///
/// Labels live in a UTF-8 text file next to it, one per line.
inline constexpr char kFvbMagic[4] = {'F', 'V', 'B', '1'};
inline constexpr std::uint32_t kFvbVersion = 1;
inline constexpr std::size_t kFvbHeaderBytes = 4 + 4 + 4 + 8 + 1;

Bytes encode_fvb(const EmbeddingSet& set);

/// Parses an FVB payload. `labels` must hold exactly `count` entries; pass
/// std::nullopt to label rows by their index.
EmbeddingSet decode_fvb(std::span<const std::uint8_t> bytes,
                        std::optional<std::vector<std::string>> labels);

std::string encode_labels(const std::vector<std::string>& labels);
std::vector<std::string> decode_labels(std::string_view text);

/// `<fvb>.labels`
std::filesystem::path default_labels_path(const std::filesystem::path& fvb);

/// Reads an FVB file and its labels. With no explicit labels path the
/// default sibling is used if present, otherwise rows are labelled by index.
EmbeddingSet read_embeddings(
        const std::filesystem::path& fvb,
        const std::optional<std::filesystem::path>& labels = std::nullopt);

void write_embeddings(
        const EmbeddingSet& set,
        const std::filesystem::path& fvb,
        const std::optional<std::filesystem::path>& labels = std::nullopt);

} // namespace vse

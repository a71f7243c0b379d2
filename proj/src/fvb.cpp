#include "vse/fvb.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace vse {

void ByteReader::get_f32s(std::span<float> out, const char* what) {
    require(out.size() * sizeof(float), what);
    const std::size_t start = pos_;
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = detail::byteswap_if_big_endian(out[i]);
        if (!std::isfinite(out[i])) {
            throw FormatError(
                    FormatErrorKind::NonFinite,
                    std::string("in ") + what, start + i * sizeof(float));
        }
    }
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    Bytes bytes(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
        throw DataError("failed to read " + path.string());
    }
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
    std::random_device rd;
    auto tmp = path;
    tmp += ".tmp." + std::to_string(rd());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot open " + tmp.string() + " for writing");
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        if (!out.flush()) {
            throw DataError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw DataError("cannot move output into place at " + path.string());
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    write_file_atomic(
            path,
            std::span<const std::uint8_t>(
                    reinterpret_cast<const std::uint8_t*>(text.data()),
                    text.size()));
}

Bytes encode_fvb(const EmbeddingSet& set) {
    ByteWriter w;
    w.bytes().reserve(kFvbHeaderBytes + set.values().size() * sizeof(float));
    w.put_raw(std::string_view(kFvbMagic, 4));
    w.put<std::uint32_t>(kFvbVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(set.dim()));
    w.put<std::uint64_t>(set.size());
    w.put<std::uint8_t>(set.normalized() ? 1 : 0);
    w.put_f32s(set.values());
    return w.take();
}

EmbeddingSet decode_fvb(std::span<const std::uint8_t> bytes,
                        std::optional<std::vector<std::string>> labels) {
    ByteReader r(bytes);
    auto magic = r.get_bytes(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kFvbMagic)) {
        throw FormatError(FormatErrorKind::BadMagic, "expected \"FVB1\"", 0);
    }
    const auto version = r.get<std::uint32_t>("version");
    if (version != kFvbVersion) {
        throw FormatError(
                FormatErrorKind::BadVersion,
                "version " + std::to_string(version), 4);
    }
    const auto dim = r.get<std::uint32_t>("dim");
    if (dim == 0) {
        throw FormatError(FormatErrorKind::BadHeader, "dim must be >= 1", 8);
    }
    const auto count = r.get<std::uint64_t>("count");
    const auto flag = r.get<std::uint8_t>("normalized flag");
    if (flag > 1) {
        throw FormatError(
                FormatErrorKind::BadHeader,
                "normalized flag must be 0 or 1", kFvbHeaderBytes - 1);
    }
    if (count > std::numeric_limits<std::uint64_t>::max() / dim /
                        sizeof(float)) {
        throw FormatError(
                FormatErrorKind::BadHeader, "count*dim overflows", 12);
    }
    std::vector<float> values(0);
    r.require(count * dim * sizeof(float), "vector payload");
    values.resize(count * dim);
    r.get_f32s(values, "vector payload");
    if (r.remaining() != 0) {
        throw FormatError(
                FormatErrorKind::TrailingBytes,
                std::to_string(r.remaining()) + " bytes after payload",
                r.offset());
    }

    std::vector<std::string> names =
            labels ? std::move(*labels) : index_labels(count);
    if (names.size() != count) {
        throw FormatError(
                FormatErrorKind::LabelCountMismatch,
                std::to_string(names.size()) + " labels for " +
                        std::to_string(count) + " vectors",
                12);
    }
    if (flag == 1) {
        for (std::uint64_t i = 0; i < count; ++i) {
            double n2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                n2 += double(values[i * dim + j]) * values[i * dim + j];
            }
            if (std::abs(n2 - 1.0) > EmbeddingSet::kNormTolerance) {
                throw FormatError(
                        FormatErrorKind::NotNormalized,
                        "row " + std::to_string(i) + " has squared norm " +
                                std::to_string(n2),
                        kFvbHeaderBytes + i * dim * sizeof(float));
            }
        }
    }
    try {
        return EmbeddingSet(dim, std::move(values), std::move(names), flag == 1);
    } catch (const DataError& e) {
        throw DataError(std::string("labels: ") + e.what());
    }
}

std::string encode_labels(const std::vector<std::string>& labels) {
    std::string out;
    for (const auto& l : labels) {
        out += l;
        out += '\n';
    }
    return out;
}

std::vector<std::string> decode_labels(std::string_view text) {
    std::vector<std::string> labels;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        labels.emplace_back(line);
        start = end + 1;
    }
    return labels;
}

std::filesystem::path default_labels_path(const std::filesystem::path& fvb) {
    auto p = fvb;
    p += ".labels";
    return p;
}

EmbeddingSet read_embeddings(
        const std::filesystem::path& fvb,
        const std::optional<std::filesystem::path>& labels) {
    const auto bytes = read_file(fvb);
    std::optional<std::vector<std::string>> names;
    auto labels_path = labels.value_or(default_labels_path(fvb));
    if (labels || std::filesystem::exists(labels_path)) {
        auto text = read_file(labels_path);
        names = decode_labels(std::string_view(
                reinterpret_cast<const char*>(text.data()), text.size()));
    }
    return decode_fvb(bytes, std::move(names));
}

void write_embeddings(
        const EmbeddingSet& set,
        const std::filesystem::path& fvb,
        const std::optional<std::filesystem::path>& labels) {
    write_file_atomic(labels.value_or(default_labels_path(fvb)),
                      encode_labels(set.labels()));
    write_file_atomic(fvb, encode_fvb(set));
}

} // namespace vse

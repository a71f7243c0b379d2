#include "vse/index.hpp"

#include <boost/crc.hpp>

#include "vse/error.hpp"

namespace vse {

std::string_view to_string(IndexKind kind) noexcept {
    switch (kind) {
        case IndexKind::Flat:
            return "flat";
        case IndexKind::IvfFlat:
            return "ivf-flat";
        case IndexKind::IvfPq:
            return "ivf-pq";
    }
    return "unknown";
}

IndexKind parse_index_kind(std::string_view name) {
    if (name == "flat") {
        return IndexKind::Flat;
    }
    if (name == "ivf-flat") {
        return IndexKind::IvfFlat;
    }
    if (name == "ivf-pq") {
        return IndexKind::IvfPq;
    }
    throw InvalidArgument(
            "unknown index kind '" + std::string(name) +
            "' (expected flat, ivf-flat or ivf-pq)");
}

Index Index::build(const EmbeddingSet& base, const IndexConfig& config) {
    switch (config.kind) {
        case IndexKind::Flat:
            return Index(FlatIndex(base));
        case IndexKind::IvfFlat:
            return Index(IvfFlatIndex::build(
                    base, config.nlist, config.seed, config.max_iters));
        case IndexKind::IvfPq:
            return Index(IvfPqIndex::build(
                    base, config.nlist, config.m, config.seed,
                    config.max_iters));
    }
    throw InternalError("unhandled index kind");
}

std::size_t Index::dim() const {
    return std::visit([](const auto& i) { return i.dim(); }, impl_);
}

std::size_t Index::size() const {
    return std::visit([](const auto& i) { return i.size(); }, impl_);
}

std::size_t Index::nlist() const {
    return std::visit(
            [](const auto& i) -> std::size_t {
                if constexpr (std::is_same_v<std::decay_t<decltype(i)>, FlatIndex>) {
                    return 0;
                } else {
                    return i.nlist();
                }
            },
            impl_);
}

const std::vector<std::string>& Index::labels() const {
    return std::visit(
            [](const auto& i) -> const std::vector<std::string>& {
                return i.labels();
            },
            impl_);
}

std::size_t Index::effective_nprobe(const SearchParams& params) const {
    if (kind() == IndexKind::Flat) {
        return 0;
    }
    return params.nprobe == 0 ? default_nprobe(nlist()) : params.nprobe;
}

SearchResult Index::search(VectorView query, const SearchParams& params) const {
    const std::size_t nprobe = effective_nprobe(params);
    return std::visit(
            [&](const auto& i) -> SearchResult {
                if constexpr (std::is_same_v<std::decay_t<decltype(i)>, FlatIndex>) {
                    return i.search(query, params.k);
                } else {
                    return i.search(query, params.k, nprobe);
                }
            },
            impl_);
}

std::vector<SearchResult> Index::search(MatrixView queries,
                                        const SearchParams& params) const {
    const std::size_t nprobe = effective_nprobe(params);
    return std::visit(
            [&](const auto& i) -> std::vector<SearchResult> {
                if constexpr (std::is_same_v<std::decay_t<decltype(i)>, FlatIndex>) {
                    return i.search(queries, params.k);
                } else {
                    return i.search(queries, params.k, nprobe);
                }
            },
            impl_);
}

std::uint64_t crc64(std::span<const std::uint8_t> bytes) noexcept {
    boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true> crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

namespace {

void put_codebook(ByteWriter& w, const Codebook& cb) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cb.dim));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cb.k));
    w.put_f32s(cb.centroids);
}

Codebook get_codebook(ByteReader& r) {
    const auto at = r.offset();
    Codebook cb;
    cb.dim = r.get<std::uint32_t>("codebook dim");
    cb.k = r.get<std::uint32_t>("codebook k");
    if (cb.dim == 0 || cb.k == 0) {
        throw FormatError(
                FormatErrorKind::Inconsistent,
                "codebook with zero dim or k", at);
    }
    r.require(cb.k * cb.dim * sizeof(float), "codebook centroids");
    cb.centroids.resize(cb.k * cb.dim);
    r.get_f32s(cb.centroids, "codebook centroids");
    return cb;
}

template <typename List, typename PutPayload>
void put_lists(ByteWriter& w, const std::vector<List>& lists,
               PutPayload&& put_payload) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(lists.size()));
    for (const auto& list : lists) {
        w.put<std::uint64_t>(list.ids.size());
        for (std::size_t i = 0; i < list.ids.size(); ++i) {
            w.put<std::int64_t>(list.ids[i]);
            put_payload(list, i);
        }
    }
}

template <typename List, typename GetPayload>
std::vector<List> get_lists(ByteReader& r, std::size_t expected_lists,
                            std::size_t count, std::size_t entry_payload,
                            GetPayload&& get_payload) {
    const auto at = r.offset();
    const auto nlist = r.get<std::uint32_t>("list count");
    if (nlist != expected_lists) {
        throw FormatError(
                FormatErrorKind::Inconsistent,
                std::to_string(nlist) + " posting lists for a codebook of " +
                        std::to_string(expected_lists),
                at);
    }
    std::vector<List> lists(nlist);
    std::size_t total = 0;
    for (auto& list : lists) {
        const auto len_at = r.offset();
        const auto len = r.get<std::uint64_t>("list length");
        if (len > count - total) {
            throw FormatError(
                    FormatErrorKind::Inconsistent,
                    "posting lists hold more entries than the header count",
                    len_at);
        }
        r.require(len * (sizeof(std::int64_t) + entry_payload), "posting list");
        total += len;
        list.ids.reserve(len);
        for (std::uint64_t i = 0; i < len; ++i) {
            list.ids.push_back(r.get<std::int64_t>("posting id"));
            get_payload(list);
        }
    }
    if (total != count) {
        throw FormatError(
                FormatErrorKind::Inconsistent,
                "posting lists hold " + std::to_string(total) +
                        " entries, header says " + std::to_string(count),
                r.offset());
    }
    return lists;
}

} // namespace

Bytes encode_index(const Index& index) {
    ByteWriter w;
    w.put_raw(std::string_view(kVidxMagic, 4));
    w.put<std::uint32_t>(kVidxVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(index.kind()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(index.dim()));
    w.put<std::uint64_t>(index.size());

    std::visit(
            [&](const auto& i) {
                using T = std::decay_t<decltype(i)>;
                if constexpr (std::is_same_v<T, FlatIndex>) {
                    w.put_f32s(i.base().values());
                } else if constexpr (std::is_same_v<T, IvfFlatIndex>) {
                    const std::size_t d = i.dim();
                    put_codebook(w, i.coarse());
                    put_lists(w, i.lists(), [&](const IvfFlatList& l, std::size_t e) {
                        w.put_f32s(std::span<const float>(
                                l.vectors.data() + e * d, d));
                    });
                } else {
                    const std::size_t m = i.m();
                    put_codebook(w, i.coarse());
                    w.put<std::uint32_t>(static_cast<std::uint32_t>(m));
                    for (const auto& s : i.sub_codebooks()) {
                        put_codebook(w, s);
                    }
                    put_lists(w, i.lists(), [&](const IvfPqList& l, std::size_t e) {
                        w.put_bytes(std::span<const std::uint8_t>(
                                l.codes.data() + e * m, m));
                    });
                }
            },
            index.variant());

    for (const auto& label : index.labels()) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(label.size()));
        w.put_raw(label);
    }
    const auto crc = crc64(w.bytes());
    w.put<std::uint64_t>(crc);
    return w.take();
}

Index decode_index(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(kVidxMagic, kVidxMagic + 4, bytes.begin())) {
        throw FormatError(FormatErrorKind::BadMagic, "expected \"VIDX\"", 0);
    }
    if (bytes.size() < 8 + 4 + 1 + 4 + 8) {
        throw FormatError(
                FormatErrorKind::Truncated, "file shorter than header and checksum",
                bytes.size());
    }
    const std::size_t crc_at = bytes.size() - sizeof(std::uint64_t);
    const auto body = bytes.first(crc_at);
    {
        ByteReader tail(bytes.subspan(crc_at));
        const auto stored = tail.get<std::uint64_t>("checksum");
        if (stored != crc64(body)) {
            throw FormatError(
                    FormatErrorKind::Checksum,
                    "stored CRC-64 does not match the file contents", crc_at);
        }
    }

    ByteReader r(body);
    r.get_bytes(4, "magic");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kVidxVersion) {
        throw FormatError(
                FormatErrorKind::BadVersion, "version " + std::to_string(version), 4);
    }
    const auto kind_byte = r.get<std::uint8_t>("index kind");
    if (kind_byte > 2) {
        throw FormatError(
                FormatErrorKind::BadHeader,
                "unknown index kind " + std::to_string(kind_byte), 8);
    }
    const auto kind = static_cast<IndexKind>(kind_byte);
    const auto dim = r.get<std::uint32_t>("dim");
    const auto count = r.get<std::uint64_t>("count");
    if (dim == 0) {
        throw FormatError(FormatErrorKind::BadHeader, "dim must be >= 1", 9);
    }

    auto read_labels = [&]() {
        std::vector<std::string> labels;
        labels.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto len = r.get<std::uint32_t>("label length");
            auto raw = r.get_bytes(len, "label");
            labels.emplace_back(reinterpret_cast<const char*>(raw.data()), raw.size());
        }
        if (r.remaining() != 0) {
            throw FormatError(
                    FormatErrorKind::TrailingBytes,
                    std::to_string(r.remaining()) + " bytes before checksum",
                    r.offset());
        }
        return labels;
    };
    auto check_dim = [&](const Codebook& cb, std::size_t at) {
        if (cb.dim != dim) {
            throw FormatError(
                    FormatErrorKind::Inconsistent,
                    "coarse codebook dim " + std::to_string(cb.dim) +
                            " != header dim " + std::to_string(dim),
                    at);
        }
    };

    try {
        switch (kind) {
            case IndexKind::Flat: {
                r.require(count * dim * sizeof(float), "flat payload");
                std::vector<float> values(count * dim);
                r.get_f32s(values, "flat payload");
                auto labels = read_labels();
                return Index(FlatIndex(
                        EmbeddingSet(dim, std::move(values), std::move(labels))));
            }
            case IndexKind::IvfFlat: {
                const auto cb_at = r.offset();
                Codebook coarse = get_codebook(r);
                check_dim(coarse, cb_at);
                auto lists = get_lists<IvfFlatList>(
                        r, coarse.k, count, dim * sizeof(float),
                        [&](IvfFlatList& l) {
                            const auto old = l.vectors.size();
                            l.vectors.resize(old + dim);
                            r.get_f32s(std::span<float>(l.vectors.data() + old, dim),
                                       "posting vector");
                        });
                auto labels = read_labels();
                return Index(IvfFlatIndex(
                        std::move(coarse), std::move(lists), std::move(labels)));
            }
            case IndexKind::IvfPq: {
                const auto cb_at = r.offset();
                IvfPqCodebooks books;
                books.coarse = get_codebook(r);
                check_dim(books.coarse, cb_at);
                const auto m_at = r.offset();
                const auto m = r.get<std::uint32_t>("m");
                if (m == 0 || dim % m != 0) {
                    throw FormatError(
                            FormatErrorKind::Inconsistent,
                            "m=" + std::to_string(m) + " does not divide dim", m_at);
                }
                for (std::uint32_t j = 0; j < m; ++j) {
                    books.sub.push_back(get_codebook(r));
                }
                auto lists = get_lists<IvfPqList>(
                        r, books.coarse.k, count, m, [&](IvfPqList& l) {
                            auto codes = r.get_bytes(m, "posting codes");
                            l.codes.insert(l.codes.end(), codes.begin(), codes.end());
                        });
                auto labels = read_labels();
                return Index(IvfPqIndex(
                        std::move(books), std::move(lists), std::move(labels)));
            }
        }
    } catch (const FormatError&) {
        throw;
    } catch (const DataError& e) {
        throw FormatError(FormatErrorKind::Inconsistent, e.what(), r.offset());
    }
    throw InternalError("unhandled index kind");
}

void save_index(const Index& index, const std::filesystem::path& path) {
    write_file_atomic(path, encode_index(index));
}

Index load_index(const std::filesystem::path& path) {
    return decode_index(read_file(path));
}

} // namespace vse

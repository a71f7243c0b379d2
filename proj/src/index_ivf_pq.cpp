#include "vse/index_ivf_pq.hpp"

#include <cstring>
#include <limits>
#include <string_view>
#include <unordered_set>

#include "distance_kernels.hpp"
#include "ivf_common.hpp"
#include "vse/error.hpp"
#include "vse/topk.hpp"

namespace vse {

namespace {

// Rows of `slices` with distinct bit patterns, in first-occurrence order.
// Stops once more than `limit` distinct rows have been seen.
std::vector<std::size_t> distinct_rows(MatrixView slices, std::size_t limit) {
    std::unordered_set<std::string_view> seen;
    std::vector<std::size_t> rows;
    const auto bytes = slices.dim() * sizeof(float);
    for (std::size_t i = 0; i < slices.rows(); ++i) {
        std::string_view key(
                reinterpret_cast<const char*>(slices.row(i).data()), bytes);
        if (seen.insert(key).second) {
            rows.push_back(i);
            if (rows.size() > limit) {
                break;
            }
        }
    }
    return rows;
}

} // namespace

IvfPqCodebooks ivf_pq_train(MatrixView base, std::size_t nlist, std::size_t m,
                            std::uint64_t seed, std::size_t max_iters) {
    const std::size_t n = base.rows();
    const std::size_t d = base.dim();
    if (m == 0 || d % m != 0) {
        throw InvalidArgument(
                "m=" + std::to_string(m) + " does not divide D=" +
                std::to_string(d));
    }
    if (n < kPqKsub) {
        throw InvalidArgument(
                "IVF-PQ training needs at least " + std::to_string(kPqKsub) +
                " vectors, got " + std::to_string(n));
    }
    if (nlist == 0 || nlist > n) {
        throw InvalidArgument(
                "nlist must be in [1, N=" + std::to_string(n) + "], got " +
                std::to_string(nlist));
    }

    IvfPqCodebooks books;
    books.coarse = kmeans_train(base, nlist, max_iters, seed);
    const Assignment a = assign(base, books.coarse);

    const std::size_t dsub = d / m;
    std::vector<float> slices(n * dsub);
    books.sub.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            auto x = base.row(i);
            auto c = books.coarse.centroid(a.labels[i]);
            for (std::size_t t = 0; t < dsub; ++t) {
                slices[i * dsub + t] = x[j * dsub + t] - c[j * dsub + t];
            }
        }
        MatrixView view(slices, dsub);
        const auto distinct = distinct_rows(view, kPqKsub);
        if (distinct.size() <= kPqKsub) {
            // Few enough distinct slices to keep every one as a centroid.
            std::vector<float> unique;
            unique.reserve(distinct.size() * dsub);
            for (auto r : distinct) {
                auto s = view.row(r);
                unique.insert(unique.end(), s.begin(), s.end());
            }
            Codebook cb = kmeans_train(
                    MatrixView(unique, dsub), distinct.size(), max_iters, seed);
            cb.inertia = assign(view, cb).inertia;
            books.sub.push_back(std::move(cb));
        } else {
            books.sub.push_back(kmeans_train(view, kPqKsub, max_iters, seed));
        }
    }
    return books;
}

IvfPqIndex IvfPqIndex::build(const EmbeddingSet& base, std::size_t nlist,
                             std::size_t m, std::uint64_t seed,
                             std::size_t max_iters) {
    auto books = ivf_pq_train(base.view(), nlist, m, seed, max_iters);
    IvfPqIndex index(std::move(books), {}, {});
    std::vector<IvfPqList> lists(nlist);
    const auto n = static_cast<std::int64_t>(base.size());
    std::vector<PqEncoding> enc(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        enc[i] = index.encode(base.row(i));
    }
    for (std::int64_t i = 0; i < n; ++i) {
        auto& list = lists[enc[i].list];
        list.ids.push_back(i);
        list.codes.insert(list.codes.end(), enc[i].codes.begin(),
                          enc[i].codes.end());
    }
    return IvfPqIndex(std::move(index.books_), std::move(lists), base.labels());
}

IvfPqIndex::IvfPqIndex(IvfPqCodebooks codebooks, std::vector<IvfPqList> lists,
                       std::vector<std::string> labels)
        : books_(std::move(codebooks)),
          lists_(std::move(lists)),
          labels_(std::move(labels)) {
    const auto& c = books_.coarse;
    if (c.k == 0 || c.dim == 0 || c.centroids.size() != c.k * c.dim) {
        throw DataError("malformed coarse codebook");
    }
    if (books_.sub.empty() || c.dim % books_.sub.size() != 0) {
        throw DataError("number of sub-codebooks does not divide D");
    }
    auto packed = std::make_shared<std::vector<detail::PackedRows>>();
    for (const auto& s : books_.sub) {
        if (s.dim != dsub() || s.k == 0 || s.k > kPqKsub ||
            s.centroids.size() != s.k * s.dim) {
            throw DataError("malformed PQ sub-codebook");
        }
        packed->emplace_back(s.view());
    }
    // Empty lists/labels is the transient state inside build().
    if (!lists_.empty() || !labels_.empty()) {
        if (lists_.size() != c.k) {
            throw DataError(
                    std::to_string(lists_.size()) +
                    " posting lists for nlist=" + std::to_string(c.k));
        }
        for (const auto& list : lists_) {
            if (list.codes.size() != list.ids.size() * m()) {
                throw DataError("posting list codes do not match its ids");
            }
            for (std::size_t i = 0; i < list.codes.size(); ++i) {
                if (list.codes[i] >= books_.sub[i % m()].k) {
                    throw DataError("PQ code exceeds its sub-codebook size");
                }
            }
        }
        detail::check_id_partition(lists_, labels_.size());
    }
    packed_coarse_ = std::make_shared<const detail::PackedRows>(c.view());
    packed_sub_ = std::move(packed);
}

PqEncoding IvfPqIndex::encode(VectorView x) const {
    if (x.size() != dim()) {
        throw DimensionMismatch(dim(), x.size());
    }
    PqEncoding out;
    out.list = packed_coarse_->nearest(x);
    auto c = books_.coarse.centroid(out.list);
    const std::size_t ds = dsub();
    std::vector<float> slice(ds);
    out.codes.resize(m());
    for (std::size_t j = 0; j < m(); ++j) {
        for (std::size_t t = 0; t < ds; ++t) {
            slice[t] = x[j * ds + t] - c[j * ds + t];
        }
        out.codes[j] = static_cast<std::uint8_t>((*packed_sub_)[j].nearest(slice));
    }
    return out;
}

std::vector<float> IvfPqIndex::reconstruct(
        std::uint32_t list, std::span<const std::uint8_t> codes) const {
    if (list >= nlist() || codes.size() != m()) {
        throw InvalidArgument("reconstruct: bad list id or code length");
    }
    auto c = books_.coarse.centroid(list);
    std::vector<float> out(c.begin(), c.end());
    const std::size_t ds = dsub();
    for (std::size_t j = 0; j < m(); ++j) {
        if (codes[j] >= books_.sub[j].k) {
            throw InvalidArgument("reconstruct: code out of range");
        }
        auto s = books_.sub[j].centroid(codes[j]);
        for (std::size_t t = 0; t < ds; ++t) {
            out[j * ds + t] += s[t];
        }
    }
    return out;
}

void IvfPqIndex::fill_adc_table(VectorView query, std::uint32_t list,
                                std::vector<double>& residual,
                                std::vector<double>& table) const {
    auto c = books_.coarse.centroid(list);
    const std::size_t ds = dsub();
    residual.resize(dim());
    for (std::size_t t = 0; t < dim(); ++t) {
        residual[t] = double(query[t]) - double(c[t]);
    }
    table.assign(m() * kPqKsub, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < m(); ++j) {
        const auto& sub = (*packed_sub_)[j];
        (*packed_sub_)[j].l2(
                std::span<const double>(residual.data() + j * ds, ds),
                std::span<double>(table.data() + j * kPqKsub, sub.rows()));
    }
}

std::vector<double> IvfPqIndex::adc_table(VectorView query,
                                          std::uint32_t list) const {
    if (query.size() != dim()) {
        throw DimensionMismatch(dim(), query.size());
    }
    if (list >= nlist()) {
        throw InvalidArgument("adc_table: list id out of range");
    }
    std::vector<double> residual;
    std::vector<double> table;
    fill_adc_table(query, list, residual, table);
    return table;
}

double IvfPqIndex::adc_distance(std::span<const double> table,
                                std::span<const std::uint8_t> codes) const {
    double s = 0.0;
    for (std::size_t j = 0; j < codes.size(); ++j) {
        s += table[j * kPqKsub + codes[j]];
    }
    return s;
}

std::vector<std::uint32_t> IvfPqIndex::probe(VectorView query,
                                             std::size_t nprobe) const {
    if (query.size() != dim()) {
        throw DimensionMismatch(dim(), query.size());
    }
    detail::check_nprobe(nprobe, nlist());
    return detail::nearest_lists(*packed_coarse_, query, nprobe);
}

void IvfPqIndex::check_search_args(std::size_t qdim, std::size_t k,
                                   std::size_t nprobe) const {
    if (qdim != dim()) {
        throw DimensionMismatch(dim(), qdim);
    }
    if (k == 0) {
        throw InvalidArgument("k must be >= 1");
    }
    detail::check_nprobe(nprobe, nlist());
}

SearchResult IvfPqIndex::search(VectorView query, std::size_t k,
                                std::size_t nprobe) const {
    check_search_args(query.size(), k, nprobe);
    thread_local std::vector<double> residual;
    thread_local std::vector<double> table;
    const std::size_t mm = m();
    TopK top(k);
    for (auto c : detail::nearest_lists(*packed_coarse_, query, nprobe)) {
        const auto& list = lists_[c];
        if (list.ids.empty()) {
            continue;
        }
        fill_adc_table(query, c, residual, table);
        const std::uint8_t* code = list.codes.data();
        for (std::size_t i = 0; i < list.ids.size(); ++i, code += mm) {
            top.push(list.ids[i], adc_distance(table, {code, mm}));
        }
    }
    return top.take();
}

std::vector<SearchResult> IvfPqIndex::search(MatrixView queries, std::size_t k,
                                             std::size_t nprobe) const {
    if (queries.rows() == 0) {
        return {};
    }
    check_search_args(queries.dim(), k, nprobe);
    const auto nq = static_cast<std::int64_t>(queries.rows());
    std::vector<SearchResult> out(nq);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t q = 0; q < nq; ++q) {
        out[q] = search(queries.row(q), k, nprobe);
    }
    return out;
}

} // namespace vse

#include "vse/index_ivf_flat.hpp"

#include <algorithm>

#include "distance_kernels.hpp"
#include "ivf_common.hpp"
#include "vse/error.hpp"
#include "vse/topk.hpp"

namespace vse {

std::size_t default_nprobe(std::size_t nlist) noexcept {
    return std::max<std::size_t>(1, nlist / 32);
}

IvfFlatIndex IvfFlatIndex::build(const EmbeddingSet& base, std::size_t nlist,
                                 std::uint64_t seed, std::size_t max_iters) {
    if (nlist == 0 || nlist > base.size()) {
        throw InvalidArgument(
                "nlist must be in [1, N=" + std::to_string(base.size()) +
                "], got " + std::to_string(nlist));
    }
    Codebook coarse = kmeans_train(base.view(), nlist, max_iters, seed);
    const Assignment a = assign(base.view(), coarse);

    const std::size_t d = base.dim();
    std::vector<IvfFlatList> lists(nlist);
    for (std::size_t c = 0; c < nlist; ++c) {
        lists[c].ids.reserve(a.counts[c]);
        lists[c].vectors.reserve(a.counts[c] * d);
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
        auto& list = lists[a.labels[i]];
        list.ids.push_back(static_cast<idx_t>(i));
        auto v = base.row(i);
        list.vectors.insert(list.vectors.end(), v.begin(), v.end());
    }
    return IvfFlatIndex(std::move(coarse), std::move(lists), base.labels());
}

IvfFlatIndex::IvfFlatIndex(Codebook coarse, std::vector<IvfFlatList> lists,
                           std::vector<std::string> labels)
        : coarse_(std::move(coarse)),
          lists_(std::move(lists)),
          labels_(std::move(labels)) {
    if (coarse_.k == 0 || coarse_.dim == 0 ||
        coarse_.centroids.size() != coarse_.k * coarse_.dim) {
        throw DataError("malformed coarse codebook");
    }
    if (lists_.size() != coarse_.k) {
        throw DataError(
                std::to_string(lists_.size()) + " posting lists for nlist=" +
                std::to_string(coarse_.k));
    }
    for (const auto& list : lists_) {
        if (list.vectors.size() != list.ids.size() * coarse_.dim) {
            throw DataError("posting list payload does not match its ids");
        }
    }
    detail::check_id_partition(lists_, labels_.size());
    packed_coarse_ = std::make_shared<const detail::PackedRows>(coarse_.view());
}

std::vector<std::uint32_t> IvfFlatIndex::probe(VectorView query,
                                               std::size_t nprobe) const {
    if (query.size() != dim()) {
        throw DimensionMismatch(dim(), query.size());
    }
    detail::check_nprobe(nprobe, nlist());
    return detail::nearest_lists(*packed_coarse_, query, nprobe);
}

void IvfFlatIndex::check_search_args(std::size_t qdim, std::size_t k,
                                     std::size_t nprobe) const {
    if (qdim != dim()) {
        throw DimensionMismatch(dim(), qdim);
    }
    if (k == 0) {
        throw InvalidArgument("k must be >= 1");
    }
    detail::check_nprobe(nprobe, nlist());
}

SearchResult IvfFlatIndex::search(VectorView query, std::size_t k,
                                  std::size_t nprobe) const {
    check_search_args(query.size(), k, nprobe);
    thread_local std::vector<double> dists;
    TopK top(k);
    for (auto c : detail::nearest_lists(*packed_coarse_, query, nprobe)) {
        const auto& list = lists_[c];
        dists.resize(list.ids.size());
        detail::l2_to_rows(query, MatrixView(list.vectors, dim()), dists);
        for (std::size_t i = 0; i < list.ids.size(); ++i) {
            top.push(list.ids[i], dists[i]);
        }
    }
    return top.take();
}

std::vector<SearchResult> IvfFlatIndex::search(MatrixView queries,
                                               std::size_t k,
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

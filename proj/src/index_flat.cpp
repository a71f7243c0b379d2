#include "vse/index_flat.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "distance_kernels.hpp"
#include "vse/error.hpp"
#include "vse/topk.hpp"

namespace vse {

FlatIndex::FlatIndex(EmbeddingSet base) : base_(std::move(base)) {
    if (base_.empty()) {
        throw InvalidArgument("cannot build a flat index over an empty set");
    }
}

SearchResult FlatIndex::search(VectorView query, std::size_t k) const {
    if (query.size() != dim()) {
        throw DimensionMismatch(dim(), query.size());
    }
    if (k == 0 || k > size()) {
        throw InvalidArgument(
                "k must be in [1, " + std::to_string(size()) + "], got " +
                std::to_string(k));
    }
    constexpr std::size_t kChunk = 256;
    std::array<double, kChunk> dists;
    TopK top(k);
    const MatrixView all = base_.view();
    for (std::size_t start = 0; start < size(); start += kChunk) {
        const std::size_t len = std::min(kChunk, size() - start);
        MatrixView chunk(
                all.values().subspan(start * dim(), len * dim()), dim());
        detail::l2_to_rows(query, chunk, std::span<double>(dists.data(), len));
        for (std::size_t i = 0; i < len; ++i) {
            top.push(static_cast<idx_t>(start + i), dists[i]);
        }
    }
    return top.take();
}

std::vector<SearchResult> FlatIndex::search(MatrixView queries,
                                            std::size_t k) const {
    if (queries.rows() > 0 && queries.dim() != dim()) {
        throw DimensionMismatch(dim(), queries.dim());
    }
    if (k == 0 || k > size()) {
        throw InvalidArgument(
                "k must be in [1, " + std::to_string(size()) + "], got " +
                std::to_string(k));
    }
    const auto nq = static_cast<std::int64_t>(queries.rows());
    std::vector<SearchResult> out(nq);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t q = 0; q < nq; ++q) {
        out[q] = search(queries.row(q), k);
    }
    return out;
}

} // namespace vse

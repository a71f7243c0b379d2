#pragma once

#include <cstddef>
#include <vector>

#include "vse/vector.hpp"

namespace vse {

/// Exact k-NN by squared L2 over the whole base set.
class FlatIndex {
 public:
    /// Throws InvalidArgument when `base` is empty.
    explicit FlatIndex(EmbeddingSet base);

    std::size_t size() const noexcept {
        return base_.size();
    }
    std::size_t dim() const noexcept {
        return base_.dim();
    }
    const EmbeddingSet& base() const noexcept {
        return base_;
    }
    const std::vector<std::string>& labels() const noexcept {
        return base_.labels();
    }

    /// The k nearest base rows, ranked by (distance, id). Requires
    /// 1 <= k <= size().
    SearchResult search(VectorView query, std::size_t k) const;

    /// One result per query row; queries are processed in parallel.
    std::vector<SearchResult> search(MatrixView queries, std::size_t k) const;

 private:
    EmbeddingSet base_;
};

} // namespace vse

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vse/kmeans.hpp"
#include "vse/vector.hpp"

namespace vse {

namespace detail {
class PackedRows;
}

/// One posting list with full copies of its vectors, in insertion order.
struct IvfFlatList {
    std::vector<idx_t> ids;
    std::vector<float> vectors;

    friend bool operator==(const IvfFlatList&, const IvfFlatList&) = default;
};

/// nprobe used when the caller does not pick one: max(1, nlist / 32).
std::size_t default_nprobe(std::size_t nlist) noexcept;

/// Inverted file with exact post-verification.
///
/// The base is partitioned by a k-means coarse quantizer; a query scans
/// the nprobe lists whose centroids are closest to it and ranks the stored
/// vectors by exact squared L2.
class IvfFlatIndex {
 public:
    /// Trains the coarse quantizer on `base` and files every row under its
    /// nearest centroid. Requires 1 <= nlist <= base.size().
    static IvfFlatIndex build(const EmbeddingSet& base, std::size_t nlist,
                              std::uint64_t seed,
                              std::size_t max_iters = kDefaultKMeansIters);

    /// Reassembles an index from its parts; used when loading from disk.
    IvfFlatIndex(Codebook coarse, std::vector<IvfFlatList> lists,
                 std::vector<std::string> labels);

    std::size_t nlist() const noexcept {
        return coarse_.k;
    }
    std::size_t dim() const noexcept {
        return coarse_.dim;
    }
    std::size_t size() const noexcept {
        return labels_.size();
    }
    const Codebook& coarse() const noexcept {
        return coarse_;
    }
    const std::vector<IvfFlatList>& lists() const noexcept {
        return lists_;
    }
    const std::vector<std::string>& labels() const noexcept {
        return labels_;
    }

    /// Lists to scan for `query`: the nprobe nearest centroids, nearest
    /// first, ties to the lower list id.
    std::vector<std::uint32_t> probe(VectorView query, std::size_t nprobe) const;

    /// Top min(k, candidates) by exact distance. Requires k >= 1 and
    /// 1 <= nprobe <= nlist.
    SearchResult search(VectorView query, std::size_t k,
                        std::size_t nprobe) const;
    std::vector<SearchResult> search(MatrixView queries, std::size_t k,
                                     std::size_t nprobe) const;

 private:
    void check_search_args(std::size_t dim, std::size_t k,
                           std::size_t nprobe) const;

    Codebook coarse_;
    std::shared_ptr<const detail::PackedRows> packed_coarse_;
    std::vector<IvfFlatList> lists_;
    std::vector<std::string> labels_;
};

} // namespace vse

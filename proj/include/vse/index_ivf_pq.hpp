#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vse/kmeans.hpp"
#include "vse/vector.hpp"

namespace vse {

namespace detail {
class PackedRows;
}

/// Sub-codebook size: one byte per code.
inline constexpr std::size_t kPqKsub = 256;

/// Posting list of PQ codes: ids[i] owns codes[i*m, (i+1)*m).
struct IvfPqList {
    std::vector<idx_t> ids;
    std::vector<std::uint8_t> codes;

    friend bool operator==(const IvfPqList&, const IvfPqList&) = default;
};

struct PqEncoding {
    std::uint32_t list = 0;
    std::vector<std::uint8_t> codes;

    friend bool operator==(const PqEncoding&, const PqEncoding&) = default;
};

/// Coarse quantizer plus the m residual sub-codebooks.
struct IvfPqCodebooks {
    Codebook coarse;
    /// sub[j].k is 256 unless subspace j had fewer distinct residual
    /// slices, in which case it equals that count.
    std::vector<Codebook> sub;
};

/// Trains the coarse quantizer on `base`, then one 256-entry k-means
/// codebook per subspace over the residuals x - coarse(x). Every k-means run
/// uses `seed`.
///
/// Requires N >= max(nlist, 256) and D % m == 0.
IvfPqCodebooks ivf_pq_train(MatrixView base, std::size_t nlist, std::size_t m,
                            std::uint64_t seed,
                            std::size_t max_iters = kDefaultKMeansIters);

/// Coarse quantizer + product quantization of residuals, searched with
/// asymmetric distance computation (ADC). Reported distances are ADC
/// estimates, not exact distances.
class IvfPqIndex {
 public:
    static IvfPqIndex build(const EmbeddingSet& base, std::size_t nlist,
                            std::size_t m, std::uint64_t seed,
                            std::size_t max_iters = kDefaultKMeansIters);

    IvfPqIndex(IvfPqCodebooks codebooks, std::vector<IvfPqList> lists,
               std::vector<std::string> labels);

    std::size_t nlist() const noexcept {
        return books_.coarse.k;
    }
    std::size_t dim() const noexcept {
        return books_.coarse.dim;
    }
    std::size_t m() const noexcept {
        return books_.sub.size();
    }
    std::size_t dsub() const noexcept {
        return dim() / m();
    }
    std::size_t size() const noexcept {
        return labels_.size();
    }
    const Codebook& coarse() const noexcept {
        return books_.coarse;
    }
    const std::vector<Codebook>& sub_codebooks() const noexcept {
        return books_.sub;
    }
    const std::vector<IvfPqList>& lists() const noexcept {
        return lists_;
    }
    const std::vector<std::string>& labels() const noexcept {
        return labels_;
    }

    /// Nearest coarse centroid and, per subspace, the nearest sub-centroid
    /// to the residual slice (ties to the lower index).
    PqEncoding encode(VectorView x) const;

    /// coarse centroid + concatenated sub-centroids.
    std::vector<float> reconstruct(std::uint32_t list,
                                   std::span<const std::uint8_t> codes) const;

    /// m x 256 table, row j holding the squared distance from slice j of
    /// (query - centroid[list]) to every sub-centroid of subspace j.
    /// Entries past sub[j].k are +inf.
    std::vector<double> adc_table(VectorView query, std::uint32_t list) const;

    /// Sum over j of table[j][codes[j]], in subspace order.
    double adc_distance(std::span<const double> table,
                        std::span<const std::uint8_t> codes) const;

    std::vector<std::uint32_t> probe(VectorView query, std::size_t nprobe) const;

    SearchResult search(VectorView query, std::size_t k,
                        std::size_t nprobe) const;
    std::vector<SearchResult> search(MatrixView queries, std::size_t k,
                                     std::size_t nprobe) const;

    /// Bytes of posting-list payload: one id plus m code bytes per vector.
    std::size_t posting_payload_bytes() const noexcept {
        return size() * (sizeof(idx_t) + m());
    }

 private:
    void check_search_args(std::size_t dim, std::size_t k,
                           std::size_t nprobe) const;
    void fill_adc_table(VectorView query, std::uint32_t list,
                        std::vector<double>& residual,
                        std::vector<double>& table) const;

    IvfPqCodebooks books_;
    std::shared_ptr<const detail::PackedRows> packed_coarse_;
    std::shared_ptr<const std::vector<detail::PackedRows>> packed_sub_;
    std::vector<IvfPqList> lists_;
    std::vector<std::string> labels_;
};

} // namespace vse

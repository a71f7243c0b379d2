#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vse/vector.hpp"

namespace vse {

/// k centroids of dimension `dim`, row-major.
struct Codebook {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<float> centroids;
    /// Within-cluster sum of squared distances of the training data against
    /// `centroids`.
    double inertia = 0.0;
    /// Lloyd iterations actually run.
    std::size_t iterations = 0;

    VectorView centroid(std::size_t i) const noexcept {
        return {centroids.data() + i * dim, dim};
    }
    MatrixView view() const noexcept {
        return MatrixView(centroids, dim);
    }

    friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct Assignment {
    std::vector<std::uint32_t> labels;
    std::vector<std::size_t> counts;
    double inertia = 0.0;
};

inline constexpr std::size_t kDefaultKMeansIters = 25;

/// Index of the centroid nearest to x (ties to the lower index). If `dist`
/// is non-null it receives the squared distance.
std::uint32_t nearest_centroid(VectorView x, const Codebook& cb,
                               double* dist = nullptr);

/// Maps every row of `data` to its nearest centroid.
Assignment assign(MatrixView data, const Codebook& cb);

/// k distinct row indices from [0, n): a partial Fisher-Yates shuffle of the
/// identity permutation driven by mt19937_64(seed), where step i swaps slot i
/// with slot i + (rng() % (n - i)).
std::vector<std::size_t> sample_distinct_rows(std::size_t n, std::size_t k,
                                              std::uint64_t seed);

/// Lloyd's k-means.
///
/// Centroids start at the rows picked by sample_distinct_rows(N, k, seed).
/// Each iteration assigns every point to its nearest centroid, stops if no
/// label changed, and otherwise moves each centroid to the mean of its
/// members. A centroid left without members is moved onto the point that is
/// farthest from its centroid inside the currently largest cluster.
///
/// The result only depends on (data, k, max_iters, seed): assignment runs in
/// parallel but all accumulation happens in row order. If `inertia_trace`
/// is given it receives the inertia measured at every assignment pass,
/// ending with the value stored in the codebook.
Codebook kmeans_train(MatrixView data, std::size_t k,
                      std::size_t max_iters = kDefaultKMeansIters,
                      std::uint64_t seed = 0,
                      std::vector<double>* inertia_trace = nullptr);

} // namespace vse

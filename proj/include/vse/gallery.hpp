#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vse/kmeans.hpp"
#include "vse/vector.hpp"

namespace vse {

/// Outcome of cleaning one identity's features.
struct CleanReport {
    std::string identity;
    /// Indices into the folder (or, from clean_gallery, into the gallery).
    std::vector<std::size_t> kept;
    std::vector<std::size_t> removed;
    std::vector<float> main_center;
    /// Mean Euclidean distance from the main cluster's members to its center.
    double avg_dist = 0.0;
    /// 2 * avg_dist; features strictly farther than this are removed.
    double threshold = 0.0;
    /// False when the folder had fewer than 3 features and was left alone.
    bool clustered = false;
};

struct CleanOptions {
    std::uint64_t seed = 0;
    std::size_t max_iters = kDefaultKMeansIters;
};

/// Removes mislabelled features from one identity folder.
///
/// The folder is split with 2-means. The larger cluster is the main one
/// (ties: lower within-cluster inertia, then lower index) and its centroid
/// the main center. Any feature, from either cluster, whose Euclidean
/// distance to the main center exceeds twice the main cluster's mean
/// distance is dropped. Folders with fewer than 3 features are kept whole.
///
/// `features` is row-major with `features.rows() >= 1`.
CleanReport clean_identity(std::string identity, MatrixView features,
                           const CleanOptions& options = {});

struct CleanedGallery {
    EmbeddingSet gallery;
    /// One report per identity, in order of first appearance.
    std::vector<CleanReport> reports;
};

/// Runs clean_identity on every label group of `set`. Kept rows keep their
/// original relative order; report indices refer to rows of `set`.
CleanedGallery clean_gallery(const EmbeddingSet& set,
                             const CleanOptions& options = {});

/// One JSON object per report: identity, kept, removed, avg_dist, threshold.
std::string clean_reports_to_jsonl(const std::vector<CleanReport>& reports);

enum class FusionStrategy {
    Single,
    Concat,
    Sort,
    Prod,
    Sum,
    Max,
};

std::string_view to_string(FusionStrategy s) noexcept;
/// Case-insensitive: single, concat, sort, prod, sum, max.
FusionStrategy parse_fusion_strategy(std::string_view name);

/// Combines the features of an image and its mirrored copy.
///
/// SINGLE returns `a`; SUM, MAX and PROD are elementwise; CONCAT is a then b
/// (2D); SORT is elementwise min(a, b) then elementwise max(a, b) (2D). With
/// `normalize` set the result is L2-normalized.
std::vector<float> fuse(VectorView a, VectorView b, FusionStrategy strategy,
                        bool normalize = false);

/// Output dimension of `fuse` for inputs of dimension `dim`.
std::size_t fused_dim(std::size_t dim, FusionStrategy strategy) noexcept;

/// Row-wise fuse of two equally sized sets; labels are taken from `a`.
EmbeddingSet fuse_sets(const EmbeddingSet& a, const EmbeddingSet& b,
                       FusionStrategy strategy, bool normalize);

/// Fuses row i with row i + N/2 of a single set holding originals in its
/// first half and mirrored copies in its second half.
EmbeddingSet fuse_halves(const EmbeddingSet& set, FusionStrategy strategy,
                         bool normalize);

} // namespace vse

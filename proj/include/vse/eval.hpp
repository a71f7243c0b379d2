#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vse/index.hpp"
#include "vse/vector.hpp"

namespace vse {

/// Probe-set recipe: sample `n_identities` identities, keep
/// round(n_identities * in_gallery_fraction) of them in the gallery, and
/// draw `probes_per_identity` probe images from each.
struct SplitSpec {
    std::size_t n_identities = 1000;
    double in_gallery_fraction = 0.8;
    std::size_t probes_per_identity = 3;
    std::uint64_t seed = 0;
};

struct Split {
    EmbeddingSet gallery;
    EmbeddingSet probes;
    /// Expected label per probe; std::nullopt for out-of-gallery probes.
    std::vector<std::optional<std::string>> truth;
};

/// Builds a gallery/probe split from `source`.
///
/// In-gallery identities need probes_per_identity + 1 images (the rest stay
/// in the gallery); out-of-gallery identities need probes_per_identity and
/// have every image withdrawn. Unsampled identities stay in the gallery
/// whole. Gallery rows keep their source order; probes are grouped by
/// identity in sampling order. Deterministic in `spec.seed`.
Split make_split(const EmbeddingSet& source, const SplitSpec& spec);

/// Label of the nearest gallery vector, or std::nullopt (reject) when a
/// threshold is given and the nearest squared distance exceeds it.
std::optional<std::string> top1_identify(const Index& index, VectorView probe,
                                         std::optional<double> threshold = {},
                                         std::size_t nprobe = 0);

struct BenchConfig {
    IndexKind kind = IndexKind::Flat;
    std::size_t nlist = 0;
    /// 0 selects default_nprobe(nlist).
    std::size_t nprobe = 0;
    std::size_t m = 0;
};

std::string describe(const BenchConfig& c);

struct BenchOptions {
    std::uint64_t seed = 0;
    std::size_t max_iters = kDefaultKMeansIters;
    std::optional<double> threshold;
    std::size_t repetitions = 3;
};

struct EvalReport {
    std::string strategy;
    std::size_t nlist = 0;
    std::size_t nprobe = 0;
    std::size_t m = 0;
    std::size_t n_probes = 0;
    std::size_t n_in_gallery = 0;
    /// Top-1 accuracy over in-gallery probes, ignoring the threshold.
    double closed_set_accuracy = 0.0;
    /// Over all probes with the threshold applied; absent without one.
    std::optional<double> open_set_accuracy;
    std::optional<double> threshold;
    double build_time = 0.0;
    /// Median wall time of one batched search over all probes.
    double total_time = 0.0;
    double per_query_time = 0.0;
    bool exact_distances = true;
};

/// Nearest gallery label and squared distance for one probe. An empty
/// label means the index returned no candidate.
struct Top1 {
    std::string label;
    double dist = 0.0;
};

/// Percentage of in-gallery probes whose top-1 label matches.
double closed_set_accuracy(const std::vector<Top1>& predictions,
                           const std::vector<std::optional<std::string>>& truth);

/// Percentage of all probes answered correctly when matches farther than
/// `threshold` are rejected: in-gallery probes need the right label within
/// the threshold, out-of-gallery probes need a rejection.
double open_set_accuracy(const std::vector<Top1>& predictions,
                         const std::vector<std::optional<std::string>>& truth,
                         double threshold);

/// Accuracy and timing of an already built index.
EvalReport evaluate_index(const Index& index, const EmbeddingSet& probes,
                          const std::vector<std::optional<std::string>>& truth,
                          std::size_t nprobe, const BenchOptions& options);

/// Builds and evaluates one index per config, sequentially.
std::vector<EvalReport> run_benchmark(
        const EmbeddingSet& gallery, const EmbeddingSet& probes,
        const std::vector<std::optional<std::string>>& truth,
        const std::vector<BenchConfig>& configs, const BenchOptions& options);

/// flat, then ivf-flat and ivf-pq for every (nlist, nprobe) pair with
/// nprobe <= nlist.
std::vector<BenchConfig> default_bench_matrix(
        const std::vector<std::size_t>& nlists,
        const std::vector<std::size_t>& nprobes, std::size_t m);

std::string reports_to_json(const std::vector<EvalReport>& reports);
/// Columns: strategy, num_clustering_centers, accuracy_pct, time_s, nprobe,
/// m, open_set_accuracy_pct, per_query_time_s, build_time_s.
std::string reports_to_tsv(const std::vector<EvalReport>& reports);

/// `identities` x `per_identity` labelled vectors: identity centers uniform
/// on the unit sphere, per-coordinate Gaussian noise of std `sigma`.
/// Labels are "id<i>".
struct SyntheticSpec {
    std::size_t identities = 1000;
    std::size_t per_identity = 10;
    std::size_t dim = 128;
    double sigma = 0.05;
    std::uint64_t seed = 0;
};
EmbeddingSet make_synthetic(const SyntheticSpec& spec);

} // namespace vse

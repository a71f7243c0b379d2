#include "vse/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "distance_kernels.hpp"
#include "vse/error.hpp"

namespace vse {

std::uint32_t nearest_centroid(VectorView x, const Codebook& cb, double* dist) {
    if (x.size() != cb.dim) {
        throw DimensionMismatch(cb.dim, x.size());
    }
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cb.k; ++c) {
        const double d = squared_l2(x, cb.centroid(c));
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::uint32_t>(c);
        }
    }
    if (dist) {
        *dist = best_d;
    }
    return best;
}

namespace {

// Per-point labels and distances; parallel over points.
void assign_into(MatrixView data, const Codebook& cb,
                 std::vector<std::uint32_t>& labels,
                 std::vector<double>& dists) {
    const auto n = static_cast<std::int64_t>(data.rows());
    labels.resize(n);
    dists.resize(n);
    const detail::PackedRows packed(cb.view());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        labels[i] = packed.nearest(data.row(i), &dists[i]);
    }
}

double sum_in_order(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s;
}

// Moves every non-empty centroid to the mean of its members, accumulating
// in row order.
void update_means(MatrixView data, const std::vector<std::uint32_t>& labels,
                  Codebook& cb, std::vector<double>& sums,
                  std::vector<std::size_t>& counts) {
    const std::size_t d = cb.dim;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto c = labels[i];
        ++counts[c];
        auto x = data.row(i);
        double* s = sums.data() + c * d;
        for (std::size_t j = 0; j < d; ++j) {
            s[j] += x[j];
        }
    }
    for (std::size_t c = 0; c < cb.k; ++c) {
        if (counts[c] == 0) {
            continue;
        }
        for (std::size_t j = 0; j < d; ++j) {
            cb.centroids[c * d + j] = float(sums[c * d + j] / double(counts[c]));
        }
    }
}

} // namespace

Assignment assign(MatrixView data, const Codebook& cb) {
    if (data.rows() > 0 && data.dim() != cb.dim) {
        throw DimensionMismatch(cb.dim, data.dim());
    }
    Assignment out;
    std::vector<double> dists;
    assign_into(data, cb, out.labels, dists);
    out.counts.assign(cb.k, 0);
    for (auto l : out.labels) {
        ++out.counts[l];
    }
    out.inertia = sum_in_order(dists);
    return out;
}

std::vector<std::size_t> sample_distinct_rows(std::size_t n, std::size_t k,
                                              std::uint64_t seed) {
    if (k > n) {
        throw InvalidArgument(
                "cannot sample " + std::to_string(k) + " distinct rows from " +
                std::to_string(n));
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(k);
    return perm;
}

Codebook kmeans_train(MatrixView data, std::size_t k, std::size_t max_iters,
                      std::uint64_t seed, std::vector<double>* inertia_trace) {
    const std::size_t n = data.rows();
    const std::size_t d = data.dim();
    if (k == 0) {
        throw InvalidArgument("k-means needs k >= 1");
    }
    if (n < k) {
        throw InvalidArgument(
                "k-means needs at least k points: N=" + std::to_string(n) +
                ", k=" + std::to_string(k));
    }
    if (max_iters == 0) {
        throw InvalidArgument("k-means needs max_iters >= 1");
    }

    Codebook cb;
    cb.k = k;
    cb.dim = d;
    cb.centroids.resize(k * d);
    const auto init = sample_distinct_rows(n, k, seed);
    for (std::size_t c = 0; c < k; ++c) {
        auto src = data.row(init[c]);
        std::copy(src.begin(), src.end(), cb.centroids.begin() + c * d);
    }

    constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> labels(n, kUnassigned);
    std::vector<std::uint32_t> next;
    std::vector<double> dists;
    std::vector<double> sums(k * d);
    std::vector<std::size_t> counts(k);
    if (inertia_trace) {
        inertia_trace->clear();
    }

    bool converged = false;
    for (std::size_t it = 0; it < max_iters; ++it) {
        assign_into(data, cb, next, dists);
        cb.inertia = sum_in_order(dists);
        cb.iterations = it + 1;
        if (inertia_trace) {
            inertia_trace->push_back(cb.inertia);
        }
        if (next == labels) {
            converged = true;
            break;
        }
        labels.swap(next);

        update_means(data, labels, cb, sums, counts);
        // Empty-cluster repair, in centroid order.
        bool repaired = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) {
                continue;
            }
            const auto largest = static_cast<std::uint32_t>(
                    std::max_element(counts.begin(), counts.end()) -
                    counts.begin());
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] != largest) {
                    continue;
                }
                const double di = squared_l2(data.row(i), cb.centroid(largest));
                if (di > far_d) {
                    far_d = di;
                    far = i;
                }
            }
            auto src = data.row(far);
            std::copy(src.begin(), src.end(), cb.centroids.begin() + c * d);
            labels[far] = static_cast<std::uint32_t>(c);
            --counts[largest];
            ++counts[c];
            repaired = true;
        }
        if (repaired) {
            update_means(data, labels, cb, sums, counts);
        }
    }

    if (!converged) {
        // The last pass updated the centroids; measure inertia against them.
        assign_into(data, cb, next, dists);
        cb.inertia = sum_in_order(dists);
        if (inertia_trace) {
            inertia_trace->push_back(cb.inertia);
        }
    }
    return cb;
}

} // namespace vse

#include "vse/gallery.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "vse/error.hpp"

namespace vse {

namespace {

std::vector<float> mean_of(MatrixView m) {
    std::vector<double> acc(m.dim(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < m.dim(); ++j) {
            acc[j] += r[j];
        }
    }
    std::vector<float> out(m.dim());
    for (std::size_t j = 0; j < m.dim(); ++j) {
        out[j] = float(acc[j] / double(m.rows()));
    }
    return out;
}

} // namespace

CleanReport clean_identity(std::string identity, MatrixView features,
                           const CleanOptions& options) {
    const std::size_t n = features.rows();
    if (n == 0) {
        throw InvalidArgument("identity folder '" + identity + "' is empty");
    }
    CleanReport report;
    report.identity = std::move(identity);

    std::vector<std::uint32_t> cluster(n, 0);
    if (n < 3) {
        report.main_center = mean_of(features);
    } else {
        report.clustered = true;
        const Codebook cb =
                kmeans_train(features, 2, options.max_iters, options.seed);
        const Assignment a = assign(features, cb);
        cluster = a.labels;
        std::array<double, 2> inertia{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            inertia[cluster[i]] += squared_l2(features.row(i), cb.centroid(cluster[i]));
        }
        std::uint32_t main = 0;
        if (a.counts[1] > a.counts[0] ||
            (a.counts[1] == a.counts[0] && inertia[1] < inertia[0])) {
            main = 1;
        }
        auto c = cb.centroid(main);
        report.main_center.assign(c.begin(), c.end());
        // Measure only members of the main cluster below.
        for (auto& l : cluster) {
            l = (l == main) ? 0 : 1;
        }
    }

    std::vector<double> dist(n);
    double sum = 0.0;
    std::size_t members = 0;
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = std::sqrt(squared_l2(features.row(i), report.main_center));
        if (cluster[i] == 0) {
            sum += dist[i];
            ++members;
        }
    }
    report.avg_dist = sum / double(members);
    report.threshold = 2.0 * report.avg_dist;
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] > report.threshold) {
            report.removed.push_back(i);
        } else {
            report.kept.push_back(i);
        }
    }
    return report;
}

CleanedGallery clean_gallery(const EmbeddingSet& set, const CleanOptions& options) {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto [it, inserted] = groups.try_emplace(set.label(i));
        if (inserted) {
            order.push_back(set.label(i));
        }
        it->second.push_back(i);
    }

    const auto n_ids = static_cast<std::int64_t>(order.size());
    std::vector<CleanReport> reports(n_ids);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t g = 0; g < n_ids; ++g) {
        const auto& rows = groups.at(order[g]);
        std::vector<float> values;
        values.reserve(rows.size() * set.dim());
        for (auto r : rows) {
            auto v = set.row(r);
            values.insert(values.end(), v.begin(), v.end());
        }
        auto rep = clean_identity(order[g], MatrixView(values, set.dim()), options);
        for (auto& k : rep.kept) {
            k = rows[k];
        }
        for (auto& k : rep.removed) {
            k = rows[k];
        }
        reports[g] = std::move(rep);
    }

    std::vector<char> keep(set.size(), 0);
    for (const auto& rep : reports) {
        for (auto k : rep.kept) {
            keep[k] = 1;
        }
    }
    std::vector<std::size_t> kept_rows;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (keep[i]) {
            kept_rows.push_back(i);
        }
    }
    return {set.subset(kept_rows), std::move(reports)};
}

std::string clean_reports_to_jsonl(const std::vector<CleanReport>& reports) {
    std::string out;
    for (const auto& r : reports) {
        nlohmann::json j = {
                {"identity", r.identity},
                {"kept", r.kept},
                {"removed", r.removed},
                {"avg_dist", r.avg_dist},
                {"threshold", r.threshold},
        };
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string_view to_string(FusionStrategy s) noexcept {
    switch (s) {
        case FusionStrategy::Single:
            return "single";
        case FusionStrategy::Concat:
            return "concat";
        case FusionStrategy::Sort:
            return "sort";
        case FusionStrategy::Prod:
            return "prod";
        case FusionStrategy::Sum:
            return "sum";
        case FusionStrategy::Max:
            return "max";
    }
    return "unknown";
}

FusionStrategy parse_fusion_strategy(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    for (auto s : {FusionStrategy::Single, FusionStrategy::Concat,
                   FusionStrategy::Sort, FusionStrategy::Prod,
                   FusionStrategy::Sum, FusionStrategy::Max}) {
        if (lower == to_string(s)) {
            return s;
        }
    }
    throw InvalidArgument("unknown fusion strategy '" + std::string(name) + "'");
}

std::size_t fused_dim(std::size_t dim, FusionStrategy strategy) noexcept {
    return (strategy == FusionStrategy::Concat || strategy == FusionStrategy::Sort)
            ? 2 * dim
            : dim;
}

std::vector<float> fuse(VectorView a, VectorView b, FusionStrategy strategy,
                        bool normalize) {
    if (strategy != FusionStrategy::Single && a.size() != b.size()) {
        throw DimensionMismatch(a.size(), b.size());
    }
    const std::size_t d = a.size();
    std::vector<float> out;
    out.reserve(fused_dim(d, strategy));
    switch (strategy) {
        case FusionStrategy::Single:
            out.assign(a.begin(), a.end());
            break;
        case FusionStrategy::Sum:
            for (std::size_t i = 0; i < d; ++i) {
                out.push_back(a[i] + b[i]);
            }
            break;
        case FusionStrategy::Max:
            for (std::size_t i = 0; i < d; ++i) {
                out.push_back(std::max(a[i], b[i]));
            }
            break;
        case FusionStrategy::Prod:
            for (std::size_t i = 0; i < d; ++i) {
                out.push_back(a[i] * b[i]);
            }
            break;
        case FusionStrategy::Concat:
            out.assign(a.begin(), a.end());
            out.insert(out.end(), b.begin(), b.end());
            break;
        case FusionStrategy::Sort:
            for (std::size_t i = 0; i < d; ++i) {
                out.push_back(std::min(a[i], b[i]));
            }
            for (std::size_t i = 0; i < d; ++i) {
                out.push_back(std::max(a[i], b[i]));
            }
            break;
    }
    return normalize ? l2_normalize(out) : out;
}

EmbeddingSet fuse_sets(const EmbeddingSet& a, const EmbeddingSet& b,
                       FusionStrategy strategy, bool normalize) {
    if (a.size() != b.size()) {
        throw DataError(
                "cannot fuse sets of " + std::to_string(a.size()) + " and " +
                std::to_string(b.size()) + " rows");
    }
    if (a.dim() != b.dim()) {
        throw DimensionMismatch(a.dim(), b.dim());
    }
    std::vector<float> values;
    values.reserve(a.size() * fused_dim(a.dim(), strategy));
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::vector<float> f;
        try {
            f = fuse(a.row(i), b.row(i), strategy, normalize);
        } catch (const DataError&) {
            throw DataError(
                    "fused row " + std::to_string(i) +
                    " has near-zero norm and cannot be normalized");
        }
        values.insert(values.end(), f.begin(), f.end());
    }
    return EmbeddingSet(fused_dim(a.dim(), strategy), std::move(values),
                        a.labels(), normalize);
}

EmbeddingSet fuse_halves(const EmbeddingSet& set, FusionStrategy strategy,
                         bool normalize) {
    if (set.size() % 2 != 0) {
        throw DataError(
                "fusing halves needs an even row count, got " +
                std::to_string(set.size()));
    }
    const std::size_t half = set.size() / 2;
    std::vector<std::size_t> first(half);
    std::vector<std::size_t> second(half);
    for (std::size_t i = 0; i < half; ++i) {
        first[i] = i;
        second[i] = i + half;
    }
    return fuse_sets(set.subset(first), set.subset(second), strategy, normalize);
}

} // namespace vse

#include "vse/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "vse/error.hpp"

namespace vse {

namespace {

// rng() % bound; the bias is irrelevant at these sizes and the rule is
// portable, unlike std::uniform_int_distribution.
std::size_t draw(std::mt19937_64& rng, std::size_t bound) {
    return static_cast<std::size_t>(rng() % bound);
}

template <typename T>
void shuffle_prefix(std::vector<T>& v, std::size_t k, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < k && i + 1 < v.size(); ++i) {
        std::swap(v[i], v[i + draw(rng, v.size() - i)]);
    }
}

} // namespace

Split make_split(const EmbeddingSet& source, const SplitSpec& spec) {
    if (spec.n_identities == 0) {
        throw InvalidArgument("split needs n_identities >= 1");
    }
    if (!(spec.in_gallery_fraction >= 0.0 && spec.in_gallery_fraction <= 1.0)) {
        throw InvalidArgument("in_gallery_fraction must be in [0, 1]");
    }
    if (spec.probes_per_identity == 0) {
        throw InvalidArgument("probes_per_identity must be >= 1");
    }

    std::vector<std::string> names;
    std::unordered_map<std::string, std::size_t> index_of;
    std::vector<std::vector<std::size_t>> rows_of;
    for (std::size_t i = 0; i < source.size(); ++i) {
        auto [it, inserted] = index_of.try_emplace(source.label(i), names.size());
        if (inserted) {
            names.push_back(source.label(i));
            rows_of.emplace_back();
        }
        rows_of[it->second].push_back(i);
    }

    const std::size_t p = spec.probes_per_identity;
    const auto n_in = static_cast<std::size_t>(
            std::llround(double(spec.n_identities) * spec.in_gallery_fraction));
    const std::size_t n_out = spec.n_identities - n_in;
    if (spec.n_identities > names.size()) {
        throw InvalidArgument(
                "split asks for " + std::to_string(spec.n_identities) +
                " identities but the source has " + std::to_string(names.size()));
    }

    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_prefix(order, order.size(), rng);

    enum class Role : std::uint8_t { Unsampled, InGallery, OutOfGallery };
    std::vector<Role> role(names.size(), Role::Unsampled);
    std::vector<std::size_t> sampled;
    std::size_t got_in = 0;
    for (auto id : order) {
        if (got_in == n_in) {
            break;
        }
        if (rows_of[id].size() >= p + 1) {
            role[id] = Role::InGallery;
            sampled.push_back(id);
            ++got_in;
        }
    }
    if (got_in < n_in) {
        throw InvalidArgument(
                "split needs " + std::to_string(n_in) +
                " in-gallery identities with >= " + std::to_string(p + 1) +
                " images, only " + std::to_string(got_in) + " exist");
    }
    std::size_t got_out = 0;
    for (auto id : order) {
        if (got_out == n_out) {
            break;
        }
        if (role[id] == Role::Unsampled && rows_of[id].size() >= p) {
            role[id] = Role::OutOfGallery;
            sampled.push_back(id);
            ++got_out;
        }
    }
    if (got_out < n_out) {
        throw InvalidArgument(
                "split needs " + std::to_string(n_out) +
                " further out-of-gallery identities with >= " +
                std::to_string(p) + " images, only " + std::to_string(got_out) +
                " remain");
    }

    std::vector<char> in_gallery(source.size(), 1);
    std::vector<std::size_t> probe_rows;
    Split split;
    for (auto id : sampled) {
        auto rows = rows_of[id];
        shuffle_prefix(rows, p, rng);
        for (std::size_t i = 0; i < p; ++i) {
            probe_rows.push_back(rows[i]);
            in_gallery[rows[i]] = 0;
            if (role[id] == Role::InGallery) {
                split.truth.emplace_back(names[id]);
            } else {
                split.truth.emplace_back(std::nullopt);
            }
        }
        if (role[id] == Role::OutOfGallery) {
            for (auto r : rows_of[id]) {
                in_gallery[r] = 0;
            }
        }
    }
    std::vector<std::size_t> gallery_rows;
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (in_gallery[i]) {
            gallery_rows.push_back(i);
        }
    }
    split.gallery = source.subset(gallery_rows);
    split.probes = source.subset(probe_rows);
    return split;
}

std::optional<std::string> top1_identify(const Index& index, VectorView probe,
                                         std::optional<double> threshold,
                                         std::size_t nprobe) {
    if (index.size() == 0) {
        throw InvalidArgument("cannot identify against an empty index");
    }
    const auto res = index.search(probe, SearchParams{1, nprobe});
    if (res.empty()) {
        return std::nullopt;
    }
    if (threshold && res.front().dist > *threshold) {
        return std::nullopt;
    }
    return index.labels()[res.front().id];
}

double closed_set_accuracy(const std::vector<Top1>& predictions,
                           const std::vector<std::optional<std::string>>& truth) {
    if (predictions.size() != truth.size()) {
        throw InvalidArgument("prediction and truth counts differ");
    }
    std::size_t total = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth[i]) {
            continue;
        }
        ++total;
        if (!predictions[i].label.empty() && predictions[i].label == *truth[i]) {
            ++hits;
        }
    }
    return total == 0 ? 0.0 : 100.0 * double(hits) / double(total);
}

double open_set_accuracy(const std::vector<Top1>& predictions,
                         const std::vector<std::optional<std::string>>& truth,
                         double threshold) {
    if (predictions.size() != truth.size()) {
        throw InvalidArgument("prediction and truth counts differ");
    }
    if (truth.empty()) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& p = predictions[i];
        const bool rejected = p.label.empty() || p.dist > threshold;
        if (truth[i]) {
            hits += (!rejected && p.label == *truth[i]) ? 1 : 0;
        } else {
            hits += rejected ? 1 : 0;
        }
    }
    return 100.0 * double(hits) / double(truth.size());
}

std::string describe(const BenchConfig& c) {
    std::string s(to_string(c.kind));
    if (c.kind != IndexKind::Flat) {
        s += " nlist=" + std::to_string(c.nlist) +
                " nprobe=" + std::to_string(c.nprobe);
    }
    if (c.kind == IndexKind::IvfPq) {
        s += " m=" + std::to_string(c.m);
    }
    return s;
}

EvalReport evaluate_index(const Index& index, const EmbeddingSet& probes,
                          const std::vector<std::optional<std::string>>& truth,
                          std::size_t nprobe, const BenchOptions& options) {
    if (probes.size() != truth.size()) {
        throw InvalidArgument("probe and truth counts differ");
    }
    if (probes.size() > 0 && probes.dim() != index.dim()) {
        throw DimensionMismatch(index.dim(), probes.dim());
    }
    const SearchParams params{1, nprobe};
    EvalReport report;
    report.strategy = std::string(to_string(index.kind()));
    report.nlist = index.nlist();
    report.nprobe = index.effective_nprobe(params);
    if (const auto* pq = std::get_if<IvfPqIndex>(&index.variant())) {
        report.m = pq->m();
    }
    report.n_probes = probes.size();
    report.exact_distances = index.exact_distances();
    report.threshold = options.threshold;

    std::vector<double> times;
    std::vector<SearchResult> results;
    const std::size_t reps = std::max<std::size_t>(1, options.repetitions);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        results = index.search(probes.view(), params);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    report.total_time = times[times.size() / 2];
    report.per_query_time =
            probes.empty() ? 0.0 : report.total_time / double(probes.size());

    std::vector<Top1> top1(probes.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].empty()) {
            top1[i] = {"", std::numeric_limits<double>::infinity()};
        } else {
            top1[i] = {index.labels()[results[i].front().id], results[i].front().dist};
        }
    }
    report.n_in_gallery = static_cast<std::size_t>(
            std::count_if(truth.begin(), truth.end(),
                          [](const auto& t) { return t.has_value(); }));
    report.closed_set_accuracy = closed_set_accuracy(top1, truth);
    if (options.threshold) {
        report.open_set_accuracy = open_set_accuracy(top1, truth, *options.threshold);
    }
    return report;
}

std::vector<EvalReport> run_benchmark(
        const EmbeddingSet& gallery, const EmbeddingSet& probes,
        const std::vector<std::optional<std::string>>& truth,
        const std::vector<BenchConfig>& configs, const BenchOptions& options) {
    std::vector<EvalReport> reports;
    reports.reserve(configs.size());
    for (const auto& c : configs) {
        IndexConfig ic;
        ic.kind = c.kind;
        ic.nlist = c.nlist;
        ic.m = c.m;
        ic.seed = options.seed;
        ic.max_iters = options.max_iters;
        const auto t0 = std::chrono::steady_clock::now();
        const Index index = Index::build(gallery, ic);
        const auto t1 = std::chrono::steady_clock::now();
        auto report = evaluate_index(index, probes, truth, c.nprobe, options);
        report.build_time = std::chrono::duration<double>(t1 - t0).count();
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<BenchConfig> default_bench_matrix(
        const std::vector<std::size_t>& nlists,
        const std::vector<std::size_t>& nprobes, std::size_t m) {
    std::vector<BenchConfig> configs{{IndexKind::Flat, 0, 0, 0}};
    for (auto kind : {IndexKind::IvfFlat, IndexKind::IvfPq}) {
        for (auto nlist : nlists) {
            for (auto nprobe : nprobes) {
                if (nprobe <= nlist) {
                    configs.push_back(
                            {kind, nlist, nprobe, kind == IndexKind::IvfPq ? m : 0});
                }
            }
        }
    }
    return configs;
}

std::string reports_to_json(const std::vector<EvalReport>& reports) {
    auto arr = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json j = {
                {"strategy", r.strategy},
                {"nlist", r.nlist},
                {"nprobe", r.nprobe},
                {"m", r.m},
                {"n_probes", r.n_probes},
                {"n_in_gallery", r.n_in_gallery},
                {"closed_set_accuracy", r.closed_set_accuracy},
                {"open_set_accuracy", nullptr},
                {"threshold", nullptr},
                {"build_time", r.build_time},
                {"total_time", r.total_time},
                {"per_query_time", r.per_query_time},
                {"approximate_distances", !r.exact_distances},
        };
        if (r.open_set_accuracy) {
            j["open_set_accuracy"] = *r.open_set_accuracy;
        }
        if (r.threshold) {
            j["threshold"] = *r.threshold;
        }
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::string reports_to_tsv(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "strategy\tnum_clustering_centers\taccuracy_pct\ttime_s\tnprobe\tm"
           "\topen_set_accuracy_pct\tper_query_time_s\tbuild_time_s\n";
    out << std::setprecision(6);
    for (const auto& r : reports) {
        out << r.strategy << '\t';
        if (r.strategy == "flat") {
            out << "-\t";
        } else {
            out << r.nlist << '\t';
        }
        out << std::fixed << std::setprecision(2) << r.closed_set_accuracy << '\t'
            << std::setprecision(6) << r.total_time << '\t';
        if (r.strategy == "flat") {
            out << "-\t-\t";
        } else {
            out << r.nprobe << '\t'
                << (r.strategy == "ivf-pq" ? std::to_string(r.m) : "-") << '\t';
        }
        if (r.open_set_accuracy) {
            out << std::setprecision(2) << *r.open_set_accuracy;
        } else {
            out << '-';
        }
        out << '\t' << std::scientific << std::setprecision(3) << r.per_query_time
            << '\t' << std::fixed << std::setprecision(6) << r.build_time << '\n';
        out << std::defaultfloat;
    }
    return out.str();
}

EmbeddingSet make_synthetic(const SyntheticSpec& spec) {
    if (spec.identities == 0 || spec.per_identity == 0 || spec.dim == 0) {
        throw InvalidArgument("synthetic set needs positive sizes");
    }
    if (!(spec.sigma >= 0.0)) {
        throw InvalidArgument("synthetic sigma must be >= 0");
    }
    std::mt19937_64 rng(spec.seed);
    auto uniform = [&]() {
        // (0, 1], 53 random bits.
        return (double(rng() >> 11) + 1.0) * 0x1.0p-53;
    };
    // Box-Muller, one normal per call.
    auto normal = [&]() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    };

    const std::size_t d = spec.dim;
    std::vector<float> values;
    values.reserve(spec.identities * spec.per_identity * d);
    std::vector<std::string> labels;
    labels.reserve(spec.identities * spec.per_identity);
    std::vector<double> center(d);
    for (std::size_t id = 0; id < spec.identities; ++id) {
        double n2 = 0.0;
        do {
            n2 = 0.0;
            for (auto& c : center) {
                c = normal();
                n2 += c * c;
            }
        } while (n2 < 1e-12);
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& c : center) {
            c *= inv;
        }
        for (std::size_t v = 0; v < spec.per_identity; ++v) {
            for (std::size_t j = 0; j < d; ++j) {
                values.push_back(float(center[j] + spec.sigma * normal()));
            }
            labels.push_back("id" + std::to_string(id));
        }
    }
    return EmbeddingSet(d, std::move(values), std::move(labels));
}

} // namespace vse

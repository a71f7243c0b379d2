#include <gtest/gtest.h>

#include <algorithm>
#include <json.hpp>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "vse/error.hpp"
#include "vse/eval.hpp"

using namespace vse;

namespace {

EmbeddingSet small_synth(std::size_t ids, std::size_t per, std::uint64_t seed) {
    SyntheticSpec s;
    s.identities = ids;
    s.per_identity = per;
    s.dim = 32;
    s.seed = seed;
    return normalize_rows(make_synthetic(s));
}

std::set<std::vector<float>> rows_of(const EmbeddingSet& s) {
    std::set<std::vector<float>> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.emplace(s.row(i).begin(), s.row(i).end());
    }
    return out;
}

} // namespace

TEST(Split, PaperCounts) {
    auto src = small_synth(1200, 6, 1);
    auto s = make_split(src, {1000, 0.8, 3, 5});
    EXPECT_EQ(s.probes.size(), 3000u);
    std::set<std::string> in, out;
    const std::set<std::string> gallery_ids(s.gallery.labels().begin(),
                                            s.gallery.labels().end());
    for (std::size_t i = 0; i < s.truth.size(); ++i) {
        if (s.truth[i]) {
            EXPECT_EQ(*s.truth[i], s.probes.label(i));
            in.insert(*s.truth[i]);
            EXPECT_TRUE(gallery_ids.count(*s.truth[i]));
        } else {
            out.insert(s.probes.label(i));
            EXPECT_FALSE(gallery_ids.count(s.probes.label(i)));
        }
    }
    EXPECT_EQ(in.size(), 800u);
    EXPECT_EQ(out.size(), 200u);
}

TEST(Split, DisjointAndDeterministic) {
    auto src = small_synth(60, 5, 2);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto s = make_split(src, {30, 0.5, 2, seed});
        auto g = rows_of(s.gallery);
        for (std::size_t i = 0; i < s.probes.size(); ++i) {
            std::vector<float> r(s.probes.row(i).begin(), s.probes.row(i).end());
            EXPECT_FALSE(g.count(r));
        }
        auto again = make_split(src, {30, 0.5, 2, seed});
        EXPECT_EQ(again.gallery, s.gallery);
        EXPECT_EQ(again.probes, s.probes);
    }
    auto a = make_split(src, {30, 0.5, 2, 1});
    auto b = make_split(src, {30, 0.5, 2, 2});
    auto c = make_split(src, {30, 0.5, 2, 3});
    EXPECT_FALSE(a.probes == b.probes && b.probes == c.probes);
}

TEST(Split, FullFractionAndErrors) {
    auto src = small_synth(20, 4, 3);
    auto s = make_split(src, {10, 1.0, 3, 1});
    for (const auto& t : s.truth) {
        EXPECT_TRUE(t.has_value());
    }
    EXPECT_THROW(make_split(src, {21, 0.8, 3, 1}), InvalidArgument);
    EXPECT_THROW(make_split(src, {10, 0.8, 4, 1}), InvalidArgument);
    EXPECT_THROW(make_split(src, {10, 1.5, 1, 1}), InvalidArgument);
    EXPECT_THROW(make_split(src, {0, 0.8, 1, 1}), InvalidArgument);
}

TEST(Top1, Examples) {
    auto g = small_synth(10, 3, 4);
    auto index = Index::build(g, {});
    EXPECT_EQ(top1_identify(index, g.row(4)), g.label(4));
    auto probe = l2_normalize(oracle::gaussian(1, 32, 99));
    EXPECT_EQ(top1_identify(index, probe, 0.0), std::nullopt);
}

TEST(Top1, ToyGalleryMatchesBruteForceLabels) {
    auto g = small_synth(10, 4, 5);
    auto probes_v = oracle::gaussian(50, 32, 6);
    EmbeddingSet probes = normalize_rows(EmbeddingSet(32, probes_v, index_labels(50)));
    auto index = Index::build(g, {});
    std::vector<std::optional<std::string>> truth;
    std::size_t expect_hits = 0;
    for (std::size_t i = 0; i < 50; ++i) {
        auto nn = oracle::knn(g.values(), 32, probes.row(i).data(), 1);
        // Alternate truth between the oracle label and a wrong one.
        const std::string lbl = g.label(nn[0].id);
        truth.emplace_back(i % 2 ? lbl : "nobody");
        expect_hits += i % 2;
        EXPECT_EQ(top1_identify(index, probes.row(i)), lbl);
    }
    auto rep = evaluate_index(index, probes, truth, 0, {});
    EXPECT_DOUBLE_EQ(rep.closed_set_accuracy, 100.0 * expect_hits / 50.0);
}

TEST(Accuracy, ClosedAndOpenSet) {
    std::vector<Top1> p{{"a", 0.1}, {"b", 0.9}, {"c", 0.2}, {"d", 0.5}};
    std::vector<std::optional<std::string>> t{"a", "b", std::nullopt, std::nullopt};
    EXPECT_DOUBLE_EQ(closed_set_accuracy(p, t), 100.0);
    // threshold 0.3: a accepted (hit), b rejected (miss), c accepted (miss), d rejected (hit)
    EXPECT_DOUBLE_EQ(open_set_accuracy(p, t, 0.3), 50.0);
}

TEST(Benchmark, FlatEqualsFullProbeAndOrdering) {
    auto src = small_synth(200, 6, 7);
    auto split = make_split(src, {100, 0.8, 3, 1});
    BenchOptions opt;
    opt.seed = 3;
    opt.repetitions = 1;
    opt.threshold = 0.5;
    std::vector<BenchConfig> cfg{{IndexKind::Flat, 0, 0, 0},
                                 {IndexKind::IvfFlat, 16, 16, 0},
                                 {IndexKind::IvfFlat, 16, 1, 0}};
    auto r = run_benchmark(split.gallery, split.probes, split.truth, cfg, opt);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].closed_set_accuracy, r[1].closed_set_accuracy);
    EXPECT_GE(r[0].closed_set_accuracy, r[2].closed_set_accuracy);
    EXPECT_EQ(r[0].closed_set_accuracy, 100.0);
    for (const auto& e : r) {
        EXPECT_NEAR(e.per_query_time, e.total_time / double(e.n_probes), 1e-12);
        EXPECT_EQ(e.n_in_gallery, 240u);
        EXPECT_TRUE(e.open_set_accuracy.has_value());
        EXPECT_GE(e.build_time, 0.0);
    }
}

TEST(Benchmark, FlatAccuracyInvariantToRowOrder) {
    auto src = small_synth(100, 5, 8);
    auto split = make_split(src, {50, 1.0, 2, 2});
    std::vector<std::size_t> rev(split.gallery.size());
    std::iota(rev.rbegin(), rev.rend(), 0);
    auto shuffled = split.gallery.subset(rev);
    BenchOptions opt;
    opt.repetitions = 1;
    auto a = evaluate_index(Index::build(split.gallery, {}), split.probes, split.truth, 0, opt);
    auto b = evaluate_index(Index::build(shuffled, {}), split.probes, split.truth, 0, opt);
    EXPECT_EQ(a.closed_set_accuracy, b.closed_set_accuracy);
}

TEST(Benchmark, DefaultMatrixAndReports) {
    auto m = default_bench_matrix({64, 256}, {1, 8, 32}, 16);
    EXPECT_EQ(m.size(), 1u + 2 * 2 * 3);
    EXPECT_EQ(m[0].kind, IndexKind::Flat);
    auto small = default_bench_matrix({4}, {1, 8}, 4);
    EXPECT_EQ(small.size(), 3u);

    EvalReport r;
    r.strategy = "ivf-pq";
    r.nlist = 64;
    r.nprobe = 8;
    r.m = 16;
    r.closed_set_accuracy = 91.5;
    r.total_time = 0.5;
    auto tsv = reports_to_tsv({r, r});
    std::istringstream in(tsv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header.rfind("strategy\tnum_clustering_centers\taccuracy_pct\ttime_s\tnprobe\tm", 0), 0u);
    EXPECT_EQ(row.rfind("ivf-pq\t64\t91.50\t", 0), 0u);
    EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 3);
    auto j = nlohmann::json::parse(reports_to_json({r}));
    ASSERT_TRUE(j.is_array());
    EXPECT_EQ(j[0]["m"], 16);
    EXPECT_EQ(j[0]["strategy"], "ivf-pq");
}

TEST(Synthetic, DeterministicShape) {
    SyntheticSpec s;
    s.identities = 20;
    s.per_identity = 3;
    s.dim = 16;
    s.seed = 4;
    auto a = make_synthetic(s);
    EXPECT_EQ(a.size(), 60u);
    EXPECT_EQ(a.dim(), 16u);
    EXPECT_EQ(a.label(0), "id0");
    EXPECT_EQ(a.label(59), "id19");
    EXPECT_EQ(a, make_synthetic(s));
    s.seed = 5;
    EXPECT_NE(a, make_synthetic(s));
}

#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "oracles.hpp"
#include "vse/error.hpp"
#include "vse/gallery.hpp"

using namespace vse;

namespace {

// 20 points inside radius 0.1 of the origin, then 3 points at distance 10.
std::vector<float> folder_with_outliers(std::size_t d, std::uint64_t seed) {
    auto in = oracle::gaussian(20, d, seed);
    for (std::size_t i = 0; i < 20; ++i) {
        double n = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            n += double(in[i * d + j]) * in[i * d + j];
        }
        const double r = 0.099 * double(i + 1) / 20.0;
        for (std::size_t j = 0; j < d; ++j) {
            in[i * d + j] = float(in[i * d + j] / std::sqrt(n) * r);
        }
    }
    auto out = oracle::gaussian(3, d, seed + 1);
    for (std::size_t i = 0; i < 3; ++i) {
        double n = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            n += double(out[i * d + j]) * out[i * d + j];
        }
        for (std::size_t j = 0; j < d; ++j) {
            in.push_back(float(out[i * d + j] / std::sqrt(n) * 10.0));
        }
    }
    return in;
}

// The cleaning rule evaluated directly on the oracle's 2-means.
std::vector<std::size_t> rule_kept(const std::vector<float>& v, std::size_t d,
                                   std::uint64_t seed) {
    const std::size_t n = v.size() / d;
    auto km = oracle::lloyd(v, d, 2, kDefaultKMeansIters, seed);
    std::vector<std::size_t> lab(n);
    std::size_t cnt[2] = {0, 0};
    double in[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        double d0 = oracle::l2sq(&v[i * d], &km.centroids[0], d);
        double d1 = oracle::l2sq(&v[i * d], &km.centroids[d], d);
        lab[i] = d1 < d0 ? 1 : 0;
        ++cnt[lab[i]];
        in[lab[i]] += std::min(d0, d1);
    }
    std::size_t main = (cnt[1] > cnt[0] || (cnt[1] == cnt[0] && in[1] < in[0])) ? 1 : 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (lab[i] == main) {
            sum += std::sqrt(oracle::l2sq(&v[i * d], &km.centroids[main * d], d));
        }
    }
    const double thr = 2.0 * sum / double(cnt[main]);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::sqrt(oracle::l2sq(&v[i * d], &km.centroids[main * d], d)) <= thr) {
            kept.push_back(i);
        }
    }
    return kept;
}

} // namespace

TEST(CleanIdentity, IdenticalFolderKeepsAll) {
    std::vector<float> v;
    for (int i = 0; i < 10; ++i) {
        v.insert(v.end(), {0.5F, -0.25F, 1.0F});
    }
    auto r = clean_identity("a", MatrixView(v, 3), {1});
    EXPECT_EQ(r.avg_dist, 0.0);
    EXPECT_EQ(r.threshold, 0.0);
    EXPECT_EQ(r.kept.size(), 10u);
    EXPECT_TRUE(r.removed.empty());
}

TEST(CleanIdentity, SmallFoldersBypass) {
    std::vector<float> one{1, 2};
    auto r = clean_identity("a", MatrixView(one, 2));
    EXPECT_EQ(r.kept, (std::vector<std::size_t>{0}));
    EXPECT_FALSE(r.clustered);
    std::vector<float> two{0, 0, 100, 100};
    r = clean_identity("b", MatrixView(two, 2));
    EXPECT_EQ(r.kept.size(), 2u);
}

TEST(CleanIdentity, OutliersRemovedMatchesRule) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto v = folder_with_outliers(16, seed * 10);
        auto r = clean_identity("x", MatrixView(v, 16), {seed});
        std::vector<std::size_t> inliers(20);
        std::iota(inliers.begin(), inliers.end(), 0);
        EXPECT_EQ(r.kept, inliers);
        EXPECT_EQ(r.removed, (std::vector<std::size_t>{20, 21, 22}));
        EXPECT_EQ(r.kept, rule_kept(v, 16, seed));
        EXPECT_EQ(r.threshold, 2.0 * r.avg_dist);
    }
}

TEST(CleanIdentity, ScaleInvariantPartition) {
    auto v = oracle::blobs(2, 8, 8, 3.0, 4);
    auto extra = oracle::gaussian(4, 8, 5, 30.0F);
    v.insert(v.end(), extra.begin(), extra.end());
    auto base = clean_identity("x", MatrixView(v, 8), {7});
    for (float scale : {0.25F, 4.0F, 1024.0F}) {
        auto w = v;
        for (auto& x : w) {
            x *= scale;
        }
        auto r = clean_identity("x", MatrixView(w, 8), {7});
        EXPECT_EQ(r.kept, base.kept) << scale;
        EXPECT_NEAR(r.avg_dist, base.avg_dist * scale, 1e-9 * scale * base.avg_dist + 1e-12);
    }
}

TEST(CleanIdentity, NeverRemovesEverything) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto v = oracle::gaussian(5, 3, seed);
        auto r = clean_identity("x", MatrixView(v, 3), {seed});
        EXPECT_GE(r.kept.size(), 1u);
        EXPECT_EQ(r.kept.size() + r.removed.size(), 5u);
    }
}

TEST(CleanGallery, TightGalleryUnchanged) {
    std::vector<std::string> labels;
    auto v = oracle::blobs(10, 6, 8, 0.01, 6);
    for (int c = 0; c < 10; ++c) {
        for (int i = 0; i < 6; ++i) {
            labels.push_back("id" + std::to_string(c));
        }
    }
    EmbeddingSet s(8, v, labels);
    // Make each folder perfectly tight so nothing can exceed the threshold.
    std::vector<float> tight;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto r = s.row((i / 6) * 6);
        tight.insert(tight.end(), r.begin(), r.end());
    }
    EmbeddingSet t(8, tight, labels);
    auto out = clean_gallery(t, {3});
    EXPECT_EQ(out.gallery, t);
    EXPECT_EQ(out.reports.size(), 10u);
}

TEST(CleanGallery, PreservesOrderAndPartitions) {
    auto a = folder_with_outliers(8, 50);
    auto b = folder_with_outliers(8, 60);
    // Interleave folders so order preservation is visible.
    std::vector<float> v;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < 23; ++i) {
        v.insert(v.end(), a.begin() + i * 8, a.begin() + (i + 1) * 8);
        labels.push_back("a");
        v.insert(v.end(), b.begin() + i * 8, b.begin() + (i + 1) * 8);
        labels.push_back("b");
    }
    EmbeddingSet s(8, v, labels);
    auto out = clean_gallery(s, {1});
    std::size_t kept = 0, removed = 0;
    for (auto& r : out.reports) {
        kept += r.kept.size();
        removed += r.removed.size();
    }
    EXPECT_EQ(kept + removed, s.size());
    EXPECT_EQ(out.gallery.size(), 40u);
    EXPECT_EQ(out.gallery.row(0)[0], s.row(0)[0]);
    EXPECT_EQ(out.gallery.label(1), "b");

    auto single = clean_gallery(EmbeddingSet(8, a, std::vector<std::string>(23, "a")), {1});
    auto direct = clean_identity("a", MatrixView(a, 8), {1});
    EXPECT_EQ(single.reports[0].kept, direct.kept);

    auto j = nlohmann::json::parse(
            clean_reports_to_jsonl(out.reports).substr(
                    0, clean_reports_to_jsonl(out.reports).find('\n')));
    EXPECT_EQ(j["identity"], "a");
    EXPECT_EQ(j["removed"].size(), 3u);
    EXPECT_TRUE(j.contains("threshold"));
    EXPECT_TRUE(j.contains("avg_dist"));
}

TEST(Fuse, Strategies) {
    std::vector<float> a{1, 2}, b{3, 4};
    EXPECT_EQ(fuse(a, b, FusionStrategy::Sum), (std::vector<float>{4, 6}));
    std::vector<float> c{1, 5}, d{3, 2};
    EXPECT_EQ(fuse(c, d, FusionStrategy::Max), (std::vector<float>{3, 5}));
    EXPECT_EQ(fuse(c, d, FusionStrategy::Prod), (std::vector<float>{3, 10}));
    EXPECT_EQ(fuse(c, d, FusionStrategy::Single), c);
    EXPECT_EQ(fuse(c, d, FusionStrategy::Concat), (std::vector<float>{1, 5, 3, 2}));
    EXPECT_EQ(fuse(c, d, FusionStrategy::Sort), (std::vector<float>{1, 2, 3, 5}));
    std::vector<float> e{1, 2, 3};
    EXPECT_THROW(fuse(a, e, FusionStrategy::Sum), DimensionMismatch);
}

TEST(Fuse, SymmetryAndNormalization) {
    auto v = oracle::gaussian(2, 32, 9);
    VectorView a(v.data(), 32), b(v.data() + 32, 32);
    for (auto s : {FusionStrategy::Sum, FusionStrategy::Max, FusionStrategy::Prod,
                   FusionStrategy::Sort}) {
        EXPECT_EQ(fuse(a, b, s), fuse(b, a, s)) << to_string(s);
    }
    EXPECT_NE(fuse(a, b, FusionStrategy::Concat), fuse(b, a, FusionStrategy::Concat));
    auto self = fuse(a, a, FusionStrategy::Sum, true);
    auto n = l2_normalize(a);
    for (std::size_t i = 0; i < 32; ++i) {
        EXPECT_NEAR(self[i], n[i], 1e-6);
    }
}

TEST(Fuse, Sets) {
    EmbeddingSet s(2, {1, 0, 0, 1, 3, 0, 0, 3}, {"a", "b", "a2", "b2"});
    auto h = fuse_halves(s, FusionStrategy::Sum, false);
    EXPECT_EQ(h.values(), (std::vector<float>{4, 0, 0, 4}));
    EXPECT_EQ(h.labels(), (std::vector<std::string>{"a", "b"}));
    auto n = fuse_halves(s, FusionStrategy::Concat, true);
    EXPECT_TRUE(n.normalized());
    EXPECT_EQ(n.dim(), 4u);
    EmbeddingSet odd(2, {1, 0, 0, 1, 3, 0}, index_labels(3));
    EXPECT_THROW(fuse_halves(odd, FusionStrategy::Sum, false), DataError);
    EXPECT_EQ(parse_fusion_strategy("SUM"), FusionStrategy::Sum);
    EXPECT_THROW(parse_fusion_strategy("avg"), InvalidArgument);
}

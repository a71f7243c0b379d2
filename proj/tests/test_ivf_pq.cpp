#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "vse/error.hpp"
#include "vse/index_flat.hpp"
#include "vse/index_ivf_pq.hpp"

using namespace vse;

namespace {

EmbeddingSet make_set(std::vector<float> v, std::size_t d) {
    const std::size_t n = v.size() / d;
    return EmbeddingSet(d, std::move(v), index_labels(n));
}

// 256 distinct points, each repeated `copies` times.
EmbeddingSet lossless_set(std::size_t d, std::size_t copies, std::uint64_t seed) {
    auto distinct = oracle::gaussian(256, d, seed);
    std::vector<float> v;
    for (std::size_t c = 0; c < copies; ++c) {
        v.insert(v.end(), distinct.begin(), distinct.end());
    }
    return make_set(v, d);
}

double recall_at_10(const IvfPqIndex& idx, const FlatIndex& flat,
                    const std::vector<float>& q, std::size_t d) {
    std::size_t hit = 0, total = 0;
    for (std::size_t i = 0; i < q.size() / d; ++i) {
        VectorView qv(&q[i * d], d);
        auto truth = flat.search(qv, 10);
        auto got = idx.search(qv, 10, idx.nlist());
        std::set<idx_t> ids;
        for (auto& n : got) {
            ids.insert(n.id);
        }
        for (auto& n : truth) {
            hit += ids.count(n.id);
            ++total;
        }
    }
    return double(hit) / double(total);
}

} // namespace

TEST(IvfPqTrain, Errors) {
    auto small = make_set(oracle::gaussian(255, 8, 1), 8);
    EXPECT_THROW(ivf_pq_train(small.view(), 4, 2, 0), InvalidArgument);
    auto ok = make_set(oracle::gaussian(300, 8, 1), 8);
    EXPECT_THROW(ivf_pq_train(ok.view(), 4, 3, 0), InvalidArgument);
    EXPECT_THROW(ivf_pq_train(ok.view(), 301, 2, 0), InvalidArgument);
}

TEST(IvfPqTrain, ZeroResidualsCollapse) {
    // Eight distinct points, nlist=8: every point is its own coarse centroid.
    auto pts = oracle::gaussian(8, 16, 2);
    std::vector<float> v;
    for (int r = 0; r < 40; ++r) {
        v.insert(v.end(), pts.begin(), pts.end());
    }
    auto books = ivf_pq_train(MatrixView(v, 16), 8, 4, 7);
    ASSERT_EQ(books.coarse.inertia, 0.0);
    for (const auto& cb : books.sub) {
        EXPECT_EQ(cb.k, 1u);
        for (float x : cb.centroids) {
            EXPECT_EQ(x, 0.0F);
        }
    }
}

TEST(IvfPqTrain, LosslessCodebooks) {
    auto s = lossless_set(32, 2, 3);
    auto books = ivf_pq_train(s.view(), 8, 8, 1);
    for (const auto& cb : books.sub) {
        EXPECT_NEAR(cb.inertia, 0.0, 1e-8);
    }
    auto idx = IvfPqIndex::build(s, 8, 8, 1);
    for (std::size_t i = 0; i < s.size(); i += 7) {
        auto e = idx.encode(s.row(i));
        auto rec = idx.reconstruct(e.list, e.codes);
        for (std::size_t j = 0; j < 32; ++j) {
            EXPECT_NEAR(rec[j], s.row(i)[j], 1e-6);
        }
    }
}

TEST(IvfPqTrain, SubspaceInertiaMatchesOracle) {
    const std::size_t n = 5000, d = 64, m = 8, dsub = 8;
    auto v = oracle::gaussian(n, d, 4);
    auto books = ivf_pq_train(MatrixView(v, d), 16, m, 9);
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<float> slices(n * dsub);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = nearest_centroid(VectorView(&v[i * d], d), books.coarse);
            for (std::size_t t = 0; t < dsub; ++t) {
                slices[i * dsub + t] =
                        v[i * d + j * dsub + t] - books.coarse.centroid(c)[j * dsub + t];
            }
        }
        auto ref = oracle::lloyd(slices, dsub, 256, kDefaultKMeansIters, 9);
        EXPECT_EQ(books.sub[j].inertia, ref.inertia) << "subspace " << j;
    }
}

TEST(IvfPqEncode, CentroidWithZeroSubCentroid) {
    IvfPqCodebooks books;
    books.coarse = {8, 4, oracle::gaussian(8, 4, 5), 0.0, 0};
    for (int j = 0; j < 2; ++j) {
        Codebook sub{3, 2, {0, 0, 1, 1, -1, 2}, 0.0, 0};
        books.sub.push_back(sub);
    }
    IvfPqIndex idx(books, std::vector<IvfPqList>(8), {});
    auto e = idx.encode(books.coarse.centroid(5));
    EXPECT_EQ(e, (PqEncoding{5, {0, 0}}));
    EXPECT_EQ(idx.encode(books.coarse.centroid(5)), e);
    std::vector<float> wrong(3, 0.0F);
    EXPECT_THROW(idx.encode(wrong), DimensionMismatch);
}

TEST(IvfPqAdc, ZeroResidualEqualsCoarseDistance) {
    auto pts = oracle::gaussian(4, 16, 6);
    std::vector<float> v;
    for (int r = 0; r < 64; ++r) {
        v.insert(v.end(), pts.begin(), pts.end());
    }
    auto s = make_set(v, 16);
    auto idx = IvfPqIndex::build(s, 4, 4, 0);
    auto q = oracle::gaussian(1, 16, 7);
    for (std::uint32_t c = 0; c < 4; ++c) {
        auto table = idx.adc_table(q, c);
        const auto& list = idx.lists()[c];
        for (std::size_t i = 0; i < list.ids.size(); ++i) {
            std::span<const std::uint8_t> codes(&list.codes[i * 4], 4);
            EXPECT_NEAR(idx.adc_distance(table, codes),
                        squared_l2(q, idx.coarse().centroid(c)), 1e-4);
        }
    }
}

TEST(IvfPqAdc, TableSumEqualsReconstructionDistance) {
    auto s = make_set(oracle::gaussian(2000, 32, 8), 32);
    auto idx = IvfPqIndex::build(s, 8, 4, 3);
    std::mt19937_64 rng(1);
    auto q = oracle::gaussian(50, 32, 9);
    for (std::size_t t = 0; t < 50; ++t) {
        VectorView qv(&q[t * 32], 32);
        std::uint32_t list = rng() % 8;
        std::vector<std::uint8_t> codes(4);
        for (std::size_t j = 0; j < 4; ++j) {
            codes[j] = rng() % idx.sub_codebooks()[j].k;
        }
        auto table = idx.adc_table(qv, list);
        EXPECT_NEAR(idx.adc_distance(table, codes),
                    squared_l2(qv, idx.reconstruct(list, codes)), 1e-4);
    }
}

TEST(IvfPqSearch, LosslessTop1MatchesFlat) {
    auto s = lossless_set(16, 2, 10);
    FlatIndex flat(s);
    auto idx = IvfPqIndex::build(s, 8, 4, 2);
    auto q = oracle::gaussian(100, 16, 11);
    for (std::size_t i = 0; i < 100; ++i) {
        VectorView qv(&q[i * 16], 16);
        auto a = idx.search(qv, 1, 8);
        auto b = flat.search(qv, 1);
        EXPECT_EQ(a[0].id, b[0].id);
        EXPECT_NEAR(a[0].dist, b[0].dist, 1e-4);
    }
}

TEST(IvfPqSearch, RecallBeatsCorruptedCodes) {
    auto s = make_set(oracle::blobs(32, 40, 32, 1.0, 12), 32);
    FlatIndex flat(s);
    auto idx = IvfPqIndex::build(s, 16, 8, 4);
    auto q = oracle::blobs(32, 3, 32, 1.0, 12);
    auto noise = oracle::gaussian(96, 32, 13, 0.3F);
    for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] += noise[i];
    }
    auto lists = idx.lists();
    std::mt19937_64 rng(5);
    for (auto& l : lists) {
        for (auto& c : l.codes) {
            c = rng() % 256;
        }
    }
    IvfPqCodebooks books{idx.coarse(), idx.sub_codebooks()};
    IvfPqIndex broken(books, lists, idx.labels());
    const double good = recall_at_10(idx, flat, q, 32);
    const double bad = recall_at_10(broken, flat, q, 32);
    EXPECT_GT(good, bad + 0.3) << good << " vs " << bad;
}

TEST(IvfPqSearch, BatchEqualsSingleAndPayloadSize) {
    auto s = make_set(oracle::gaussian(1000, 16, 14), 16);
    auto idx = IvfPqIndex::build(s, 4, 8, 1);
    auto q = oracle::gaussian(20, 16, 15);
    auto batch = idx.search(MatrixView(q, 16), 5, 2);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(batch[i], idx.search(VectorView(&q[i * 16], 16), 5, 2));
    }
    std::size_t bytes = 0;
    for (const auto& l : idx.lists()) {
        bytes += l.ids.size() * sizeof(idx_t) + l.codes.size();
        EXPECT_EQ(l.codes.size(), l.ids.size() * 8);
    }
    EXPECT_EQ(bytes, 1000u * (8 + 8));
    EXPECT_EQ(idx.posting_payload_bytes(), bytes);
    std::vector<float> qv(16, 0.0F);
    EXPECT_THROW(idx.search(qv, 1, 0), InvalidArgument);
    EXPECT_THROW(idx.search(qv, 1, 5), InvalidArgument);
}

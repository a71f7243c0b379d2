#include "distance_kernels.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "vse/error.hpp"

namespace vse::detail {

void l2_to_rows(VectorView x, MatrixView rows, std::span<double> out) {
    const std::size_t d = rows.dim();
    const std::size_t n = rows.rows();
    if (n > 0 && x.size() != d) {
        throw DimensionMismatch(d, x.size());
    }
    constexpr std::size_t kLanes = 4;
    const float* base = rows.values().data();
    std::size_t r = 0;
    for (; r + kLanes <= n; r += kLanes) {
        const float* p0 = base + (r + 0) * d;
        const float* p1 = base + (r + 1) * d;
        const float* p2 = base + (r + 2) * d;
        const float* p3 = base + (r + 3) * d;
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            const double xt = x[t];
            const double d0 = xt - double(p0[t]);
            const double d1 = xt - double(p1[t]);
            const double d2 = xt - double(p2[t]);
            const double d3 = xt - double(p3[t]);
            a0 += d0 * d0;
            a1 += d1 * d1;
            a2 += d2 * d2;
            a3 += d3 * d3;
        }
        out[r + 0] = a0;
        out[r + 1] = a1;
        out[r + 2] = a2;
        out[r + 3] = a3;
    }
    for (; r < n; ++r) {
        out[r] = squared_l2(x, rows.row(r));
    }
}

PackedRows::PackedRows(MatrixView rows)
        : rows_(rows.rows()),
          dim_(rows.dim()),
          blocks_((rows.rows() + kBlock - 1) / kBlock),
          data_(blocks_ * dim_ * kBlock, 0.0) {
    for (std::size_t r = 0; r < rows_; ++r) {
        const std::size_t b = r / kBlock;
        const std::size_t l = r % kBlock;
        auto v = rows.row(r);
        for (std::size_t t = 0; t < dim_; ++t) {
            data_[(b * dim_ + t) * kBlock + l] = v[t];
        }
    }
}

namespace {

template <typename T>
void packed_l2(std::span<const T> x, const double* data, std::size_t dim,
               std::size_t rows, std::span<double> out) {
    constexpr std::size_t kBlock = PackedRows::kBlock;
    const std::size_t blocks = (rows + kBlock - 1) / kBlock;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::array<double, kBlock> acc{};
        const double* p = data + b * dim * kBlock;
        for (std::size_t t = 0; t < dim; ++t) {
            const double xt = double(x[t]);
            for (std::size_t l = 0; l < kBlock; ++l) {
                const double diff = xt - p[t * kBlock + l];
                acc[l] += diff * diff;
            }
        }
        const std::size_t valid = std::min(kBlock, rows - b * kBlock);
        for (std::size_t l = 0; l < valid; ++l) {
            out[b * kBlock + l] = acc[l];
        }
    }
}

} // namespace

void PackedRows::l2(VectorView x, std::span<double> out) const {
    if (x.size() != dim_) {
        throw DimensionMismatch(dim_, x.size());
    }
    packed_l2(x, data_.data(), dim_, rows_, out);
}

void PackedRows::l2(std::span<const double> x, std::span<double> out) const {
    if (x.size() != dim_) {
        throw DimensionMismatch(dim_, x.size());
    }
    packed_l2(x, data_.data(), dim_, rows_, out);
}

std::uint32_t PackedRows::nearest(VectorView x, double* dist) const {
    thread_local std::vector<double> scratch;
    scratch.resize(rows_);
    l2(x, scratch);
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rows_; ++r) {
        if (scratch[r] < best_d) {
            best_d = scratch[r];
            best = static_cast<std::uint32_t>(r);
        }
    }
    if (dist) {
        *dist = best_d;
    }
    return best;
}

} // namespace vse::detail

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vse/vector.hpp"

// Batched forms of squared_l2. Every distance is accumulated in ascending
// index order exactly like the scalar routine, so the outputs are bitwise
// identical to it; batching only interleaves independent rows.

namespace vse::detail {

/// out[r] = squared_l2(x, rows.row(r)) over row-major f32 storage.
void l2_to_rows(VectorView x, MatrixView rows, std::span<double> out);

/// Rows widened to double and stored column-major in blocks of kBlock rows.
/// Used for small, hot matrices (centroids, sub-codebooks).
class PackedRows {
 public:
    static constexpr std::size_t kBlock = 8;

    PackedRows() = default;
    explicit PackedRows(MatrixView rows);

    std::size_t rows() const noexcept {
        return rows_;
    }
    std::size_t dim() const noexcept {
        return dim_;
    }

    /// out.size() must equal rows().
    void l2(VectorView x, std::span<double> out) const;

    /// Same as l2() for a query already held in double.
    void l2(std::span<const double> x, std::span<double> out) const;

    /// Nearest row, ties to the lower index.
    std::uint32_t nearest(VectorView x, double* dist = nullptr) const;

 private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::size_t blocks_ = 0;
    std::vector<double> data_;
};

} // namespace vse::detail

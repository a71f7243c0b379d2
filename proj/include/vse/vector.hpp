#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace vse {

using idx_t = std::int64_t;
using VectorView = std::span<const float>;

/// Squared Euclidean distance. Each term is formed in double from the f32
/// inputs and summed in ascending index order, so the value is reproducible
/// bit for bit and symmetric in its arguments.
double squared_l2(VectorView a, VectorView b);

/// Returns v / ||v||. Throws DataError when ||v|| <= 1e-12.
std::vector<float> l2_normalize(VectorView v);

/// Non-owning row-major view over `rows() * dim()` floats.
class MatrixView {
 public:
    MatrixView() = default;
    MatrixView(std::span<const float> values, std::size_t dim);

    std::size_t rows() const noexcept {
        return dim_ == 0 ? 0 : values_.size() / dim_;
    }
    std::size_t dim() const noexcept {
        return dim_;
    }
    VectorView row(std::size_t i) const noexcept {
        return values_.subspan(i * dim_, dim_);
    }
    std::span<const float> values() const noexcept {
        return values_;
    }

 private:
    std::span<const float> values_;
    std::size_t dim_ = 0;
};

/// A labelled set of D-dimensional embeddings (the gallery or a probe set).
///
/// Every value is finite, every label is a non-empty single line, and when
/// `normalized()` is set each row has squared norm within 1e-5 of 1.
class EmbeddingSet {
 public:
    static constexpr double kNormTolerance = 1e-5;

    EmbeddingSet() = default;
    EmbeddingSet(std::size_t dim, std::vector<float> values,
                 std::vector<std::string> labels, bool normalized = false);

    std::size_t size() const noexcept {
        return labels_.size();
    }
    bool empty() const noexcept {
        return labels_.empty();
    }
    std::size_t dim() const noexcept {
        return dim_;
    }
    bool normalized() const noexcept {
        return normalized_;
    }

    VectorView row(std::size_t i) const noexcept {
        return {values_.data() + i * dim_, dim_};
    }
    const std::string& label(std::size_t i) const noexcept {
        return labels_[i];
    }
    const std::vector<std::string>& labels() const noexcept {
        return labels_;
    }
    const std::vector<float>& values() const noexcept {
        return values_;
    }
    MatrixView view() const noexcept {
        return MatrixView(values_, dim_);
    }

    /// Rows `rows` in the given order, labels and flag carried over.
    EmbeddingSet subset(std::span<const std::size_t> rows) const;

    friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
    std::size_t dim_ = 0;
    std::vector<float> values_;
    std::vector<std::string> labels_;
    bool normalized_ = false;
};

/// Copy of `set` with every row L2-normalized. The error for a near-zero
/// row names its index.
EmbeddingSet normalize_rows(const EmbeddingSet& set);

/// Labels "0", "1", ... for sets that arrive without a labels file.
std::vector<std::string> index_labels(std::size_t n);

struct Neighbor {
    idx_t id = -1;
    double dist = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ranking order used everywhere: distance ascending, then id ascending.
inline bool ranks_before(const Neighbor& a, const Neighbor& b) noexcept {
    return std::tie(a.dist, a.id) < std::tie(b.dist, b.id);
}

/// Ranked neighbors of one query.
using SearchResult = std::vector<Neighbor>;

} // namespace vse

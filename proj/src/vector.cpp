#include "vse/vector.hpp"

#include <cmath>

#include "vse/error.hpp"

namespace vse {

const char* to_string(FormatErrorKind kind) noexcept {
    switch (kind) {
        case FormatErrorKind::BadMagic:
            return "bad magic";
        case FormatErrorKind::BadVersion:
            return "unsupported version";
        case FormatErrorKind::BadHeader:
            return "bad header";
        case FormatErrorKind::Truncated:
            return "truncated payload";
        case FormatErrorKind::TrailingBytes:
            return "trailing bytes";
        case FormatErrorKind::LabelCountMismatch:
            return "label count mismatch";
        case FormatErrorKind::NonFinite:
            return "non-finite value";
        case FormatErrorKind::NotNormalized:
            return "row not normalized";
        case FormatErrorKind::Checksum:
            return "checksum mismatch";
        case FormatErrorKind::Inconsistent:
            return "inconsistent payload";
    }
    return "format error";
}

double squared_l2(VectorView a, VectorView b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch(a.size(), b.size());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return acc;
}

std::vector<float> l2_normalize(VectorView v) {
    double norm2 = 0.0;
    for (float x : v) {
        norm2 += double(x) * double(x);
    }
    const double norm = std::sqrt(norm2);
    if (!(norm > 1e-12)) {
        throw DataError("cannot normalize a vector with norm <= 1e-12");
    }
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = float(double(v[i]) / norm);
    }
    return out;
}

MatrixView::MatrixView(std::span<const float> values, std::size_t dim)
        : values_(values), dim_(dim) {
    if (dim == 0 && !values.empty()) {
        throw InvalidArgument("matrix dimension must be positive");
    }
    if (dim != 0 && values.size() % dim != 0) {
        throw DataError(
                "matrix of " + std::to_string(values.size()) +
                " values is not a whole number of rows of dimension " +
                std::to_string(dim));
    }
}

EmbeddingSet::EmbeddingSet(
        std::size_t dim,
        std::vector<float> values,
        std::vector<std::string> labels,
        bool normalized)
        : dim_(dim),
          values_(std::move(values)),
          labels_(std::move(labels)),
          normalized_(normalized) {
    if (dim_ == 0) {
        throw InvalidArgument("embedding dimension must be >= 1");
    }
    if (values_.size() != labels_.size() * dim_) {
        throw DataError(
                "embedding set has " + std::to_string(labels_.size()) +
                " labels but " + std::to_string(values_.size()) +
                " values for dimension " + std::to_string(dim_));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw DataError(
                    "non-finite value in row " + std::to_string(i / dim_) +
                    ", column " + std::to_string(i % dim_));
        }
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const auto& l = labels_[i];
        if (l.empty() || l.find_first_of("\r\n") != std::string::npos) {
            throw DataError(
                    "label of row " + std::to_string(i) +
                    " must be a non-empty single line");
        }
    }
    if (normalized_) {
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            double n2 = 0.0;
            for (float x : row(i)) {
                n2 += double(x) * double(x);
            }
            if (std::abs(n2 - 1.0) > kNormTolerance) {
                throw DataError(
                        "row " + std::to_string(i) +
                        " is flagged normalized but has squared norm " +
                        std::to_string(n2));
            }
        }
    }
}

EmbeddingSet EmbeddingSet::subset(std::span<const std::size_t> rows) const {
    std::vector<float> values;
    values.reserve(rows.size() * dim_);
    std::vector<std::string> labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= size()) {
            throw InvalidArgument(
                    "row " + std::to_string(r) + " out of range for set of " +
                    std::to_string(size()));
        }
        auto v = row(r);
        values.insert(values.end(), v.begin(), v.end());
        labels.push_back(labels_[r]);
    }
    return EmbeddingSet(dim_, std::move(values), std::move(labels), normalized_);
}

EmbeddingSet normalize_rows(const EmbeddingSet& set) {
    std::vector<float> values;
    values.reserve(set.values().size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        try {
            auto n = l2_normalize(set.row(i));
            values.insert(values.end(), n.begin(), n.end());
        } catch (const DataError&) {
            throw DataError(
                    "row " + std::to_string(i) +
                    " has near-zero norm and cannot be normalized");
        }
    }
    return EmbeddingSet(set.dim(), std::move(values), set.labels(), true);
}

std::vector<std::string> index_labels(std::size_t n) {
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels.push_back(std::to_string(i));
    }
    return labels;
}

} // namespace vse

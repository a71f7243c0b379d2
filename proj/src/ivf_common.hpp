#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distance_kernels.hpp"
#include "vse/error.hpp"
#include "vse/topk.hpp"

namespace vse::detail {

inline std::vector<std::uint32_t> nearest_lists(const PackedRows& coarse,
                                                VectorView query,
                                                std::size_t nprobe) {
    thread_local std::vector<double> dists;
    dists.resize(coarse.rows());
    coarse.l2(query, dists);
    TopK top(nprobe);
    for (std::size_t c = 0; c < dists.size(); ++c) {
        top.push(static_cast<idx_t>(c), dists[c]);
    }
    std::vector<std::uint32_t> out;
    out.reserve(nprobe);
    for (const auto& n : top.take()) {
        out.push_back(static_cast<std::uint32_t>(n.id));
    }
    return out;
}

inline void check_nprobe(std::size_t nprobe, std::size_t nlist) {
    if (nprobe == 0 || nprobe > nlist) {
        throw InvalidArgument(
                "nprobe must be in [1, " + std::to_string(nlist) + "], got " +
                std::to_string(nprobe));
    }
}

/// Every id in [0, n) appears in exactly one of the lists.
template <typename List>
void check_id_partition(const std::vector<List>& lists, std::size_t n) {
    std::vector<char> seen(n, 0);
    for (const auto& list : lists) {
        for (idx_t id : list.ids) {
            if (id < 0 || static_cast<std::size_t>(id) >= n) {
                throw DataError(
                        "posting list id " + std::to_string(id) +
                        " out of range for " + std::to_string(n) + " vectors");
            }
            if (seen[id]) {
                throw DataError(
                        "id " + std::to_string(id) +
                        " appears in more than one posting list");
            }
            seen[id] = 1;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) {
            throw DataError("id " + std::to_string(i) + " is in no posting list");
        }
    }
}

} // namespace vse::detail

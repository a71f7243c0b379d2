#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "vse/vector.hpp"

namespace vse {

/// Keeps the k best neighbors seen so far in a bounded max-heap whose top
/// is the current worst entry. Insertion order does not affect the result.
class TopK {
 public:
    explicit TopK(std::size_t k) : k_(k) {
        heap_.reserve(k);
    }

    void push(idx_t id, double dist) {
        Neighbor n{id, dist};
        if (heap_.size() < k_) {
            heap_.push_back(n);
            std::push_heap(heap_.begin(), heap_.end(), ranks_before);
        } else if (k_ > 0 && ranks_before(n, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
            heap_.back() = n;
            std::push_heap(heap_.begin(), heap_.end(), ranks_before);
        }
    }

    /// Worst retained distance, or +inf while fewer than k are held.
    double bound() const noexcept;

    std::size_t size() const noexcept {
        return heap_.size();
    }

    /// Drains the heap into an ascending ranked list.
    SearchResult take() {
        std::sort_heap(heap_.begin(), heap_.end(), ranks_before);
        return std::move(heap_);
    }

 private:
    std::size_t k_;
    std::vector<Neighbor> heap_;
};

inline double TopK::bound() const noexcept {
    return heap_.size() < k_ ? std::numeric_limits<double>::infinity()
                             : heap_.front().dist;
}

} // namespace vse

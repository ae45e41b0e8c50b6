#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gbq/quantum.hpp"

namespace gbq {

// Bounded priority queue of (dissimilarity, ball id) pairs. The entry with
// the largest dissimilarity has the highest eviction priority. When the
// queue is full an incoming entry displaces the current worst unless it is
// strictly worse than it; the at-capacity comparison goes through the
// comparator so it is counted and quantized consistently with the backend.
class NeighborQueue {
public:
    struct Entry {
        double dissimilarity = 0.0;
        std::uint32_t id = 0;

        bool operator==(const Entry&) const = default;
    };

    explicit NeighborQueue(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("k must be at least 1");
        entries_.reserve(capacity);
    }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    // Insertion order; use sorted() for rank order.
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    // Highest-eviction-priority entry: max by (dissimilarity, id).
    const Entry& worst() const {
        if (entries_.empty()) throw std::out_of_range("queue empty");
        return *std::max_element(entries_.begin(), entries_.end(), before);
    }

    // Returns false when the entry was rejected (strictly worse than the
    // current worst while at capacity).
    bool push(double dissimilarity, std::uint32_t id,
              const ComparatorConfig& cmp = {}, SimCounters* counters = nullptr) {
        if (entries_.size() < capacity_) {
            entries_.push_back({dissimilarity, id});
            return true;
        }
        const Entry& w = worst();
        // Reject iff incoming > worst, i.e. the comparator flags worst < incoming.
        if (quantum_compare(w.dissimilarity, dissimilarity, cmp, counters).less) {
            return false;
        }
        auto it = std::max_element(entries_.begin(), entries_.end(), before);
        *it = {dissimilarity, id};
        return true;
    }

    // Entries ascending by (dissimilarity, id).
    std::vector<Entry> sorted() const {
        std::vector<Entry> out = entries_;
        std::sort(out.begin(), out.end(), before);
        return out;
    }

private:
    static bool before(const Entry& a, const Entry& b) {
        if (a.dissimilarity != b.dissimilarity)
            return a.dissimilarity < b.dissimilarity;
        return a.id < b.id;
    }

    std::size_t capacity_;
    std::vector<Entry> entries_;
};

}  // namespace gbq

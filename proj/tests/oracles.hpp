#pragma once

#include <cstdint>
#include <vector>

#include "gbq/index.hpp"
#include "gbq/neighbor_queue.hpp"
#include "gbq/quantum.hpp"

// Reference routes kept independent of the library implementations they
// check: fidelities go through full 2^d statevectors, selection minima
// through plain comparisons, angles through the per-bit rotation sum.
namespace gbq::oracles {

// |<phi|psi>|^2 via the 2^d amplitude vectors of the product states.
double statevector_fidelity(const AngleState& a, const AngleState& b);

double statevector_dissimilarity(const AngleState& a, const AngleState& b);

// Sum of pi/2^v over set bits, v = 2 for the most significant bit down to
// bits + 1 for the least significant.
double bit_schedule_angle(std::uint32_t value, int bits);

struct ReplayStep {
    int layer = 0;
    std::vector<std::uint32_t> candidates;
    std::uint32_t selected = 0;
    double dissimilarity = 0.0;
};

struct ReplayResult {
    std::vector<ReplayStep> steps;
    std::vector<NeighborQueue::Entry> queue;  // insertion order
    std::size_t evaluations = 0;              // sum of candidate set sizes
};

// Step-by-step replay of the exact-backend layered descent: full node set at
// the top layer, two-hop candidate set of the carried entry below, per-layer
// minimum by direct comparison, bounded queue with worst-entry eviction.
ReplayResult replay_search(const HierarchicalIndex& index, const AngleState& query,
                           std::size_t k);

}  // namespace gbq::oracles

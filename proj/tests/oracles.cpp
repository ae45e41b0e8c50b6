#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gbq::oracles {

double statevector_fidelity(const AngleState& a, const AngleState& b) {
    if (a.angles.size() != b.angles.size())
        throw std::invalid_argument("dimension mismatch");
    const std::size_t dim = a.angles.size();
    if (dim > 20) throw std::invalid_argument("statevector too large");
    const std::size_t states = std::size_t{1} << dim;
    double inner = 0.0;
    for (std::size_t basis = 0; basis < states; ++basis) {
        double amp_a = 1.0;
        double amp_b = 1.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const bool one = (basis >> j) & 1u;
            amp_a *= one ? std::sin(a.angles[j]) : std::cos(a.angles[j]);
            amp_b *= one ? std::sin(b.angles[j]) : std::cos(b.angles[j]);
        }
        inner += amp_a * amp_b;
    }
    return inner * inner;
}

double statevector_dissimilarity(const AngleState& a, const AngleState& b) {
    return 0.5 - 0.5 * statevector_fidelity(a, b);
}

double bit_schedule_angle(std::uint32_t value, int bits) {
    double angle = 0.0;
    for (int p = bits - 1; p >= 0; --p) {
        if ((value >> p) & 1u) {
            const int v = bits + 1 - p;  // msb -> 2, lsb -> bits + 1
            angle += std::numbers::pi / std::ldexp(1.0, v);
        }
    }
    return angle;
}

namespace {

// The oracle recomputes dissimilarities through its own route, so values
// that tie exactly in the implementation can differ here by float noise.
// Comparisons treat gaps below this tolerance as ties (broken by id), far
// under any genuine gap on the quantized angle grid.
constexpr double kTieTolerance = 1e-12;

bool entry_before(const NeighborQueue::Entry& a, const NeighborQueue::Entry& b) {
    if (a.dissimilarity < b.dissimilarity - kTieTolerance) return true;
    if (b.dissimilarity < a.dissimilarity - kTieTolerance) return false;
    return a.id < b.id;
}

// Mirrors the queue's displacement rule with plain arithmetic.
void queue_push(std::vector<NeighborQueue::Entry>& queue, std::size_t capacity,
                double dissimilarity, std::uint32_t id) {
    if (queue.size() < capacity) {
        queue.push_back({dissimilarity, id});
        return;
    }
    auto worst = std::max_element(queue.begin(), queue.end(), entry_before);
    if (dissimilarity > worst->dissimilarity + kTieTolerance) return;
    *worst = {dissimilarity, id};
}

std::vector<std::uint32_t> two_hop_set(const LayerGraph& graph,
                                       std::uint32_t entry) {
    std::vector<std::uint32_t> out{entry};
    for (std::uint32_t n : graph.neighbors(entry)) {
        out.push_back(n);
        const auto hop = graph.neighbors(n);
        out.insert(out.end(), hop.begin(), hop.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

ReplayResult replay_search(const HierarchicalIndex& index, const AngleState& query,
                           std::size_t k) {
    if (index.inserted_count() == 0) throw std::invalid_argument("index empty");
    ReplayResult result;
    std::uint32_t entry = *index.entry_point();
    for (int l = index.top_layer(); l >= 0; --l) {
        const LayerGraph& graph = index.layer(l);
        ReplayStep step;
        step.layer = l;
        step.candidates = (l == index.top_layer()) ? graph.nodes
                                                   : two_hop_set(graph, entry);
        result.evaluations += step.candidates.size();

        bool first = true;
        for (std::uint32_t id : step.candidates) {
            const double d =
                statevector_dissimilarity(index.encoded(id), query);
            // Strictly-better only; ties keep the earlier (lower) id.
            if (first || d < step.dissimilarity - kTieTolerance) {
                step.selected = id;
                step.dissimilarity = d;
                first = false;
            }
        }
        queue_push(result.queue, k, step.dissimilarity, step.selected);
        entry = step.selected;
        result.steps.push_back(std::move(step));
    }
    return result;
}

}  // namespace gbq::oracles

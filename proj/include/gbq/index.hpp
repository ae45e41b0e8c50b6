#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "gbq/granular_ball.hpp"
#include "gbq/neighbor_queue.hpp"
#include "gbq/quantum.hpp"

namespace gbq {

// Highest layer index for a ball population: floor(log2 M).
int max_level_for(std::size_t ball_count);

// Level for a uniform draw r in (0, 1): min(floor(-log2 r), floor(log2 M)).
int level_from_r(double r, std::size_t ball_count);

// Draws r from rng and applies level_from_r.
int assign_level(Rng& rng, std::size_t ball_count);

// One layer of the hierarchy: its member nodes (S_i) and capped-degree
// adjacency (J_i). Neighbor lists are kept sorted and symmetric.
struct LayerGraph {
    std::vector<std::uint32_t> nodes;
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> adjacency;

    bool contains(std::uint32_t id) const;
    void add_node(std::uint32_t id);
    std::span<const std::uint32_t> neighbors(std::uint32_t id) const;
    std::size_t degree(std::uint32_t id) const { return neighbors(id).size(); }

    bool operator==(const LayerGraph&) const = default;
};

struct IndexParams {
    std::uint32_t max_neighbors = 4;  // m, degree cap per layer
    int bits = 8;                     // t_a
    SimilarityBackend backend{};
    int cmp_bits = 16;                // q, comparator register width
    std::uint64_t level_seed = 0;
    bool full_layer_candidates = false;  // whole-layer candidate scope on insert

    bool operator==(const IndexParams&) const = default;
};

struct SearchStep {
    int layer = 0;
    std::vector<std::uint32_t> candidates;  // as evaluated, ascending ids
    std::uint32_t selected = 0;
    double dissimilarity = 0.0;
};
using SearchTrace = std::vector<SearchStep>;

class HierarchicalIndex;
void serialize(const HierarchicalIndex& index, std::ostream& out);
HierarchicalIndex deserialize(std::istream& in);

// Layered small-world graph over granular-balls. Construction is
// single-writer; a built index is immutable and supports concurrent
// searches (instrumentation counters are atomic).
class HierarchicalIndex {
public:
    // Takes ownership of the balls, drops their member lists and encodes
    // every center. Balls become insertable ids [0, ball_count).
    HierarchicalIndex(std::vector<GranularBall> balls, IndexParams params);

    // Adds one ball to the graph: membership on layers [0, L] with L drawn
    // from rng, one edge to the per-layer nearest node on every layer that
    // already holds other nodes.
    void insert(std::uint32_t id, Rng& rng);

    // Inserts all balls in id order, drawing levels from level_seed.
    void build_all();

    // Top-down descent: full node set at the top layer, the carried entry's
    // candidate set below; the per-layer nearest node is pushed into the
    // returned queue of capacity k.
    NeighborQueue search(const AngleState& query, std::size_t k,
                         SearchTrace* trace = nullptr) const;

    // {entry} plus its neighbors plus their neighbors on the layer,
    // deduplicated, ascending. Throws if entry is not a layer member.
    std::vector<std::uint32_t> candidate_set(int layer, std::uint32_t entry) const;

    std::size_t ball_count() const noexcept { return balls_.size(); }
    std::size_t inserted_count() const noexcept { return inserted_count_; }
    std::size_t dim() const noexcept { return dim_; }
    int max_level() const noexcept { return static_cast<int>(layers_.size()) - 1; }
    int top_layer() const noexcept { return top_layer_; }
    std::optional<std::uint32_t> entry_point() const;
    const std::vector<LayerGraph>& layers() const noexcept { return layers_; }
    const LayerGraph& layer(int level) const { return layers_.at(static_cast<std::size_t>(level)); }
    std::span<const GranularBall> balls() const noexcept { return balls_; }
    const GranularBall& ball(std::uint32_t id) const { return balls_.at(id); }
    std::span<const AngleState> encoded_states() const noexcept { return encoded_; }
    const AngleState& encoded(std::uint32_t id) const { return encoded_.at(id); }
    const IndexParams& params() const noexcept { return params_; }
    const ComparatorConfig& comparator() const noexcept { return cmp_; }

    SimCounters& counters() const noexcept { return *counters_; }
    CounterSnapshot counter_snapshot() const { return snapshot(*counters_); }

    bool structurally_equal(const HierarchicalIndex& other) const;

private:
    friend HierarchicalIndex deserialize(std::istream& in);

    HierarchicalIndex() = default;

    struct Selected {
        std::uint32_t id = 0;
        double dissimilarity = 0.0;
    };

    // Minimum-dissimilarity node among the layer candidates (full node set
    // or candidate_set of `entry`), skipping `exclude`. Selection walks the
    // scored batch through the comparator; ties keep the lowest id.
    Selected nearest_in_layer(int layer, const AngleState& query,
                              std::uint32_t entry,
                              std::optional<std::uint32_t> exclude,
                              bool full_set, std::uint64_t stream,
                              std::vector<std::uint32_t>* candidates_out = nullptr) const;

    void add_edge(int layer, std::uint32_t a, std::uint32_t b);
    void prune_overflow(int layer, std::uint32_t node);

    static constexpr std::uint32_t kNoEntry = 0xffffffffu;

    IndexParams params_{};
    ComparatorConfig cmp_{};
    std::size_t dim_ = 0;
    std::vector<GranularBall> balls_;
    std::vector<AngleState> encoded_;
    std::vector<LayerGraph> layers_;
    std::vector<bool> inserted_;
    std::size_t inserted_count_ = 0;
    std::uint32_t entry_ = kNoEntry;
    int top_layer_ = 0;
    std::unique_ptr<SimCounters> counters_ = std::make_unique<SimCounters>();
};

}  // namespace gbq

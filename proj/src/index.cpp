#include "gbq/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace gbq {

namespace {

constexpr std::uint64_t kInsertStreamTag = 0x696e737274ull;
constexpr std::uint64_t kSearchStreamTag = 0x7365617263ull;

}  // namespace

int max_level_for(std::size_t ball_count) {
    if (ball_count == 0) return 0;
    return static_cast<int>(std::bit_width(ball_count) - 1);
}

int level_from_r(double r, std::size_t ball_count) {
    if (ball_count == 0) throw std::invalid_argument("empty ball set");
    if (!(r > 0.0) || r >= 1.0) throw std::invalid_argument("r must lie in (0, 1)");
    const double raw = std::floor(-std::log2(r));
    const int cap = max_level_for(ball_count);
    if (raw >= static_cast<double>(cap)) return cap;
    return static_cast<int>(raw);
}

int assign_level(Rng& rng, std::size_t ball_count) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double r = uniform(rng);
    while (r <= 0.0) r = uniform(rng);  // open interval
    return level_from_r(r, ball_count);
}

bool LayerGraph::contains(std::uint32_t id) const {
    return std::binary_search(nodes.begin(), nodes.end(), id);
}

void LayerGraph::add_node(std::uint32_t id) {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
    if (it != nodes.end() && *it == id) return;
    nodes.insert(it, id);
}

std::span<const std::uint32_t> LayerGraph::neighbors(std::uint32_t id) const {
    auto it = adjacency.find(id);
    if (it == adjacency.end()) return {};
    return it->second;
}

HierarchicalIndex::HierarchicalIndex(std::vector<GranularBall> balls,
                                     IndexParams params)
    : params_(params),
      cmp_(comparator_for(params.backend, params.cmp_bits)),
      balls_(std::move(balls)) {
    if (params_.max_neighbors == 0)
        throw std::invalid_argument("max neighbors must be at least 1");
    dim_ = balls_.empty() ? 0 : balls_.front().center.size();
    const EncodingParams enc{params_.bits, static_cast<int>(dim_)};
    encoded_.reserve(balls_.size());
    for (auto& ball : balls_) {
        if (ball.center.size() != dim_)
            throw std::invalid_argument("dimension mismatch");
        encoded_.push_back(encode_center(ball.center, enc));
        ball.members.clear();
        ball.members.shrink_to_fit();
        ball.seed_member = 0;
    }
    layers_.assign(static_cast<std::size_t>(max_level_for(balls_.size())) + 1, {});
    inserted_.assign(balls_.size(), false);
}

std::optional<std::uint32_t> HierarchicalIndex::entry_point() const {
    if (entry_ == kNoEntry) return std::nullopt;
    return entry_;
}

std::vector<std::uint32_t> HierarchicalIndex::candidate_set(
    int layer, std::uint32_t entry) const {
    const LayerGraph& graph = this->layer(layer);
    if (!graph.contains(entry)) throw std::invalid_argument("invalid entry point");
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

HierarchicalIndex::Selected HierarchicalIndex::nearest_in_layer(
    int layer, const AngleState& query, std::uint32_t entry,
    std::optional<std::uint32_t> exclude, bool full_set, std::uint64_t stream,
    std::vector<std::uint32_t>* candidates_out) const {
    std::vector<std::uint32_t> candidates =
        full_set ? layers_[static_cast<std::size_t>(layer)].nodes
                 : candidate_set(layer, entry);
    if (exclude) {
        auto it = std::lower_bound(candidates.begin(), candidates.end(), *exclude);
        if (it != candidates.end() && *it == *exclude) candidates.erase(it);
    }
    if (candidates.empty()) throw std::runtime_error("no candidates in layer");
    if (candidates_out) *candidates_out = candidates;

    std::vector<const AngleState*> states;
    states.reserve(candidates.size());
    for (std::uint32_t id : candidates) states.push_back(&encoded_[id]);
    const auto scored =
        similarity_batch(std::span<const AngleState* const>(states), query,
                         params_.backend, stream, counters_.get());

    // Walk the scored set through the comparator, keeping the running
    // minimum; candidates are in ascending id order so ties keep the lowest.
    std::size_t best = 0;
    for (std::size_t i = 1; i < scored.size(); ++i) {
        if (quantum_compare(scored[i].dissimilarity, scored[best].dissimilarity,
                            cmp_, counters_.get())
                .less) {
            best = i;
        }
    }
    return {candidates[best], scored[best].dissimilarity};
}

void HierarchicalIndex::add_edge(int layer, std::uint32_t a, std::uint32_t b) {
    if (a == b) return;
    auto connect = [&](std::uint32_t from, std::uint32_t to) {
        auto& list = layers_[static_cast<std::size_t>(layer)].adjacency[from];
        auto it = std::lower_bound(list.begin(), list.end(), to);
        if (it != list.end() && *it == to) return;
        list.insert(it, to);
    };
    connect(a, b);
    connect(b, a);
    prune_overflow(layer, a);
    prune_overflow(layer, b);
}

void HierarchicalIndex::prune_overflow(int layer, std::uint32_t node) {
    auto& adjacency = layers_[static_cast<std::size_t>(layer)].adjacency;
    auto it = adjacency.find(node);
    if (it == adjacency.end() || it->second.size() <= params_.max_neighbors) return;

    // Drop the farthest neighbor by exact dissimilarity between the stored
    // centers; ties drop the highest id. Both endpoints are updated to keep
    // the adjacency symmetric.
    std::uint32_t worst = it->second.front();
    double worst_d = -1.0;
    for (std::uint32_t n : it->second) {
        const double d = 0.5 - 0.5 * exact_similarity(encoded_[node], encoded_[n]);
        if (d > worst_d || (d == worst_d && n > worst)) {
            worst_d = d;
            worst = n;
        }
    }
    auto& list = it->second;
    list.erase(std::lower_bound(list.begin(), list.end(), worst));
    auto& back = adjacency[worst];
    auto back_it = std::lower_bound(back.begin(), back.end(), node);
    if (back_it != back.end() && *back_it == node) back.erase(back_it);
    if (back.empty()) adjacency.erase(worst);
}

void HierarchicalIndex::insert(std::uint32_t id, Rng& rng) {
    if (id >= balls_.size()) throw std::invalid_argument("unknown ball id");
    if (inserted_[id]) throw std::invalid_argument("duplicate id");

    const int level = assign_level(rng, balls_.size());
    for (int l = 0; l <= level; ++l)
        layers_[static_cast<std::size_t>(l)].add_node(id);
    inserted_[id] = true;
    ++inserted_count_;

    if (inserted_count_ == 1) {
        entry_ = id;
        top_layer_ = level;
        return;
    }

    const int old_top = top_layer_;
    const AngleState& query = encoded_[id];
    std::uint32_t entry = entry_;
    for (int l = old_top; l >= 0; --l) {
        const bool full = (l == old_top) || params_.full_layer_candidates;
        const std::uint64_t stream = derive_seed(
            params_.backend.seed, kInsertStreamTag,
            (static_cast<std::uint64_t>(id) << 8) ^ static_cast<std::uint64_t>(l));
        const Selected sel = nearest_in_layer(l, query, entry, id, full, stream);
        // Layers above the node's level are descent-only; membership layers
        // record one edge to the nearest node.
        if (l <= level) add_edge(l, id, sel.id);
        entry = sel.id;
    }

    if (level > old_top) {
        entry_ = id;
        top_layer_ = level;
    }
}

void HierarchicalIndex::build_all() {
    Rng rng(params_.level_seed);
    for (std::uint32_t id = 0; id < balls_.size(); ++id) insert(id, rng);
}

NeighborQueue HierarchicalIndex::search(const AngleState& query, std::size_t k,
                                        SearchTrace* trace) const {
    if (inserted_count_ == 0) throw std::runtime_error("index empty");
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    if (query.angles.size() != dim_)
        throw std::invalid_argument("dimension mismatch");

    NeighborQueue queue(k);
    std::uint32_t entry = entry_;
    for (int l = top_layer_; l >= 0; --l) {
        const bool full = (l == top_layer_);
        const std::uint64_t stream =
            derive_seed(params_.backend.seed, kSearchStreamTag,
                        static_cast<std::uint64_t>(l));
        std::vector<std::uint32_t> candidates;
        const Selected sel =
            nearest_in_layer(l, query, entry, std::nullopt, full, stream,
                             trace ? &candidates : nullptr);
        queue.push(sel.dissimilarity, sel.id, cmp_, counters_.get());
        if (trace)
            trace->push_back({l, std::move(candidates), sel.id, sel.dissimilarity});
        entry = sel.id;
    }
    return queue;
}

bool HierarchicalIndex::structurally_equal(const HierarchicalIndex& other) const {
    return params_ == other.params_ && dim_ == other.dim_ &&
           std::equal(balls_.begin(), balls_.end(), other.balls_.begin(),
                      other.balls_.end(),
                      [](const GranularBall& a, const GranularBall& b) {
                          return a.center == b.center && a.radius == b.radius &&
                                 a.label == b.label && a.purity == b.purity &&
                                 a.member_count == b.member_count;
                      }) &&
           encoded_ == other.encoded_ && layers_ == other.layers_ &&
           inserted_ == other.inserted_ && inserted_count_ == other.inserted_count_ &&
           entry_ == other.entry_ && top_layer_ == other.top_layer_;
}

}  // namespace gbq

#include <algorithm>

#include "binary_io.hpp"
#include "gbq/index.hpp"

namespace gbq {

namespace {

constexpr std::uint32_t kIndexMagic = 0x49514247u;    // "GBQI"
constexpr std::uint32_t kIndexVersion = 1;
constexpr std::uint32_t kIndexTrailer = 0x2e444e45u;  // "END."
constexpr std::uint32_t kNoEntrySentinel = 0xffffffffu;

}  // namespace

void serialize(const HierarchicalIndex& index, std::ostream& out) {
    detail::Writer w(out);
    w.u32(kIndexMagic);
    w.u32(kIndexVersion);

    const IndexParams& p = index.params();
    w.u32(p.max_neighbors);
    w.i32(p.bits);
    w.u8(p.backend.mode == BackendMode::Sampled ? 1 : 0);
    w.u64(p.backend.shots);
    w.u64(p.backend.seed);
    w.i32(p.cmp_bits);
    w.u64(p.level_seed);
    w.u8(p.full_layer_candidates ? 1 : 0);

    w.u64(index.ball_count());
    w.u32(static_cast<std::uint32_t>(index.dim()));
    for (const GranularBall& ball : index.balls()) {
        for (double c : ball.center) w.f64(c);
        w.f64(ball.radius);
        w.i32(ball.label);
        w.f64(ball.purity);
        w.u64(ball.member_count);
    }

    w.u32(static_cast<std::uint32_t>(index.layers().size()));
    for (const LayerGraph& layer : index.layers()) {
        w.u64(layer.nodes.size());
        for (std::uint32_t id : layer.nodes) w.u32(id);
        // Adjacency entries sorted by node id so the byte layout is stable.
        std::vector<std::uint32_t> with_edges;
        with_edges.reserve(layer.adjacency.size());
        for (const auto& [id, list] : layer.adjacency)
            if (!list.empty()) with_edges.push_back(id);
        std::sort(with_edges.begin(), with_edges.end());
        w.u64(with_edges.size());
        for (std::uint32_t id : with_edges) {
            const auto neighbors = layer.neighbors(id);
            w.u32(id);
            w.u32(static_cast<std::uint32_t>(neighbors.size()));
            for (std::uint32_t n : neighbors) w.u32(n);
        }
    }

    w.u32(index.entry_point().value_or(kNoEntrySentinel));
    w.i32(index.top_layer());
    w.u32(kIndexTrailer);
}

HierarchicalIndex deserialize(std::istream& in) {
    detail::Reader r(in);
    if (r.u32() != kIndexMagic) r.fail("bad magic");
    if (r.u32() != kIndexVersion) r.fail("unsupported version");

    IndexParams params;
    params.max_neighbors = r.u32();
    params.bits = r.i32();
    params.backend.mode = r.u8() ? BackendMode::Sampled : BackendMode::Exact;
    params.backend.shots = r.u64();
    params.backend.seed = r.u64();
    params.cmp_bits = r.i32();
    params.level_seed = r.u64();
    params.full_layer_candidates = r.u8() != 0;
    if (params.bits < 1 || params.bits > kMaxFeatureBits)
        r.fail("feature bits out of range");
    if (params.max_neighbors == 0) r.fail("max neighbors out of range");

    const std::uint64_t ball_count = r.u64();
    const std::uint32_t dim = r.u32();
    if (ball_count > (1ull << 32)) r.fail("ball count out of range");

    std::vector<GranularBall> balls;
    balls.reserve(ball_count);
    for (std::uint64_t i = 0; i < ball_count; ++i) {
        GranularBall ball;
        ball.center.reserve(dim);
        for (std::uint32_t j = 0; j < dim; ++j) ball.center.push_back(r.f64());
        ball.radius = r.f64();
        ball.label = r.i32();
        ball.purity = r.f64();
        ball.member_count = r.u64();
        balls.push_back(std::move(ball));
    }

    // Rebuilds encodings through the normal constructor, then restores the
    // graph structure on top of it.
    HierarchicalIndex index(std::move(balls), params);

    const std::uint32_t layer_count = r.u32();
    if (layer_count != index.layers_.size()) r.fail("layer count mismatch");
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        LayerGraph& layer = index.layers_[l];
        const std::uint64_t node_count = r.u64();
        if (node_count > ball_count) r.fail("layer node count out of range");
        layer.nodes.reserve(node_count);
        for (std::uint64_t i = 0; i < node_count; ++i) {
            const std::uint32_t id = r.u32();
            if (id >= ball_count) r.fail("node id out of range");
            if (!layer.nodes.empty() && layer.nodes.back() >= id)
                r.fail("layer nodes not strictly ascending");
            layer.nodes.push_back(id);
        }
        const std::uint64_t edge_entries = r.u64();
        if (edge_entries > node_count) r.fail("adjacency entry count out of range");
        for (std::uint64_t i = 0; i < edge_entries; ++i) {
            const std::uint32_t id = r.u32();
            if (!layer.contains(id)) r.fail("adjacency endpoint not a layer member");
            const std::uint32_t degree = r.u32();
            if (degree > params.max_neighbors) r.fail("degree above cap");
            std::vector<std::uint32_t> list;
            list.reserve(degree);
            for (std::uint32_t e = 0; e < degree; ++e) {
                const std::uint32_t n = r.u32();
                if (!layer.contains(n)) r.fail("adjacency endpoint not a layer member");
                list.push_back(n);
            }
            layer.adjacency.emplace(id, std::move(list));
        }
    }

    const std::uint32_t entry = r.u32();
    const std::int32_t top = r.i32();
    if (r.u32() != kIndexTrailer) r.fail("bad trailer");

    if (entry != kNoEntrySentinel) {
        if (entry >= ball_count) r.fail("entry point out of range");
        index.entry_ = entry;
    }
    if (top < 0 || static_cast<std::size_t>(top) >= index.layers_.size())
        r.fail("top layer out of range");
    index.top_layer_ = top;

    // Layer 0 holds every inserted node.
    for (std::uint32_t id : index.layers_[0].nodes) index.inserted_[id] = true;
    index.inserted_count_ = index.layers_[0].nodes.size();
    if (index.inserted_count_ > 0 && index.entry_ == kNoEntrySentinel)
        r.fail("missing entry point");

    return index;
}

}  // namespace gbq

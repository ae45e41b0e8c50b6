#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <doctest.h>

#include "gbq/bench.hpp"
#include "gbq/dataset.hpp"
#include "gbq/index.hpp"
#include "oracles.hpp"

using namespace gbq;

namespace {

// Singleton balls on integer centers; the unit the index actually stores.
std::vector<GranularBall> singleton_balls(const std::vector<LabeledPoint>& points) {
    std::vector<GranularBall> balls;
    balls.reserve(points.size());
    for (const auto& p : points) {
        GranularBall ball;
        ball.center.assign(p.features.begin(), p.features.end());
        ball.label = p.label;
        ball.member_count = 1;
        balls.push_back(std::move(ball));
    }
    return balls;
}

std::vector<GranularBall> blob_balls(std::size_t count, std::uint64_t seed,
                                     std::size_t dim = 2, int bits = 8) {
    const std::size_t per_class = (count + 1) / 2;
    Dataset raw = make_blobs(per_class, 2, dim, 8.0, 1.0, seed);
    raw.records.resize(count);
    return singleton_balls(quantize_dataset(raw, bits).points);
}

HierarchicalIndex build_index(std::size_t count, std::uint64_t seed,
                              IndexParams params = {}, std::size_t dim = 2) {
    params.level_seed = seed;
    HierarchicalIndex index(blob_balls(count, seed, dim, params.bits), params);
    index.build_all();
    return index;
}

void check_structure(const HierarchicalIndex& index) {
    const auto& layers = index.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        CHECK(std::is_sorted(layers[l].nodes.begin(), layers[l].nodes.end()));
        // Nested membership: every node above layer 0 also sits below.
        if (l > 0)
            for (std::uint32_t id : layers[l].nodes)
                CHECK(layers[l - 1].contains(id));
        for (const auto& [id, neighbors] : layers[l].adjacency) {
            CHECK(layers[l].contains(id));
            CHECK(neighbors.size() <= index.params().max_neighbors);
            for (std::uint32_t n : neighbors) {
                CHECK(layers[l].contains(n));
                const auto back = layers[l].neighbors(n);
                CHECK(std::binary_search(back.begin(), back.end(), id));
            }
        }
    }
}

}  // namespace

TEST_CASE("level_from_r matches the closed form") {
    CHECK(level_from_r(0.9, 1024) == 0);
    CHECK(level_from_r(0.25, 1024) == 2);
    CHECK(level_from_r(1e-12, 16) == 4);  // capped at log2 M
    CHECK(max_level_for(1) == 0);
    CHECK(max_level_for(16384) == 14);
    CHECK(max_level_for(100) == 6);
    CHECK_THROWS_AS(level_from_r(0.0, 16), std::invalid_argument);
    CHECK_THROWS_AS(level_from_r(1.0, 16), std::invalid_argument);
}

TEST_CASE("assign_level follows the geometric tail") {
    Rng rng(12345);
    const std::size_t draws = 100000;
    const std::size_t ball_count = 1u << 14;
    std::vector<std::size_t> at_least(16, 0);
    for (std::size_t i = 0; i < draws; ++i) {
        const int level = assign_level(rng, ball_count);
        REQUIRE(level >= 0);
        REQUIRE(level <= 14);
        for (int l = 0; l <= level; ++l) ++at_least[static_cast<std::size_t>(l)];
    }
    for (int l = 1; l <= 5; ++l) {
        const double p = static_cast<double>(at_least[static_cast<std::size_t>(l)]) /
                         static_cast<double>(draws);
        CHECK(std::abs(p - std::pow(2.0, -l)) <= 0.01);
    }
}

TEST_CASE("candidate_set expands one hop around the entry") {
    IndexParams params;
    params.max_neighbors = 4;
    HierarchicalIndex index(blob_balls(6, 3), params);
    Rng rng(3);
    for (std::uint32_t id = 0; id < 6; ++id) index.insert(id, rng);

    // Layer 0 holds everyone; validate the two-hop contract on it.
    const auto& graph = index.layer(0);
    for (std::uint32_t id = 0; id < 6; ++id) {
        std::set<std::uint32_t> expected{id};
        for (std::uint32_t n : graph.neighbors(id)) {
            expected.insert(n);
            for (std::uint32_t nn : graph.neighbors(n)) expected.insert(nn);
        }
        const auto got = index.candidate_set(0, id);
        CHECK(std::is_sorted(got.begin(), got.end()));
        CHECK(std::set<std::uint32_t>(got.begin(), got.end()) == expected);
    }
    CHECK_THROWS_WITH_AS(index.candidate_set(index.top_layer(), 999),
                         "invalid entry point", std::invalid_argument);
}

TEST_CASE("first insertion creates membership but no edges") {
    IndexParams params;
    HierarchicalIndex index(blob_balls(8, 1), params);
    Rng rng(9);
    index.insert(0, rng);
    CHECK(index.inserted_count() == 1);
    CHECK(index.entry_point() == 0u);
    for (int l = 0; l <= index.top_layer(); ++l) {
        CHECK(index.layer(l).contains(0));
        CHECK(index.layer(l).adjacency.empty());
    }
    CHECK_THROWS_WITH_AS(index.insert(0, rng), "duplicate id",
                         std::invalid_argument);
    CHECK_THROWS_AS(index.insert(42, rng), std::invalid_argument);
}

TEST_CASE("second insertion links once per shared layer") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        IndexParams params;
        HierarchicalIndex index(blob_balls(8, seed), params);
        Rng rng(seed);
        index.insert(0, rng);
        index.insert(1, rng);
        for (int l = 0; l < static_cast<int>(index.layers().size()); ++l) {
            const auto& graph = index.layer(l);
            const bool shared = graph.contains(0) && graph.contains(1);
            if (shared) {
                CHECK(graph.neighbors(0).size() == 1);
                CHECK(graph.neighbors(1).size() == 1);
                CHECK(graph.neighbors(0)[0] == 1);
                CHECK(graph.neighbors(1)[0] == 0);
            } else {
                CHECK(graph.adjacency.empty());
            }
        }
    }
}

TEST_CASE("a built index keeps its structural invariants") {
    IndexParams params;
    params.max_neighbors = 4;
    HierarchicalIndex index(blob_balls(64, 5), params);
    params.level_seed = 5;
    Rng rng(5);
    for (std::uint32_t id = 0; id < 64; ++id) {
        index.insert(id, rng);
        check_structure(index);  // invariants hold after every insertion
    }
    CHECK(index.inserted_count() == 64);
    CHECK(index.layer(0).nodes.size() == 64);
    CHECK(index.top_layer() <= index.max_level());
}

TEST_CASE("search on a single-ball index returns that ball") {
    IndexParams params;
    HierarchicalIndex index(blob_balls(1, 2), params);
    index.build_all();
    const auto queue = index.search(index.encoded(0), 3);
    REQUIRE(queue.size() == 1);
    CHECK(queue.entries()[0].id == 0);
    CHECK(queue.entries()[0].dissimilarity == 0.0);
}

TEST_CASE("search errors") {
    IndexParams params;
    HierarchicalIndex index(blob_balls(4, 2), params);
    CHECK_THROWS_WITH_AS(index.search(index.encoded(0), 2), "index empty",
                         std::runtime_error);
    index.build_all();
    CHECK_THROWS_AS(index.search(index.encoded(0), 0), std::invalid_argument);
    CHECK_THROWS_WITH_AS(index.search(AngleState{{0.1, 0.2, 0.3}}, 2),
                         "dimension mismatch", std::invalid_argument);
}

TEST_CASE("searching for a stored center finds it with zero dissimilarity") {
    const auto index = build_index(32, 7);
    for (std::uint32_t id = 0; id < 32; id += 5) {
        SearchTrace trace;
        const auto queue = index.search(index.encoded(id), 4, &trace);
        bool reachable = false;
        for (const auto& step : trace)
            reachable |= std::binary_search(step.candidates.begin(),
                                            step.candidates.end(), id);
        if (reachable) {
            // Quantized angles only tie exactly on equal encodings, so a zero
            // entry always means a center matching the query.
            bool found = false;
            for (const auto& entry : queue.entries())
                found |= entry.dissimilarity == 0.0 &&
                         index.encoded(entry.id) == index.encoded(id);
            CHECK(found);
        }
    }
}

TEST_CASE("search matches the step-replay oracle") {
    std::size_t checked = 0;
    for (std::size_t count : {4u, 16u, 33u, 64u}) {
        const auto index = build_index(count, 1000 + count);
        Rng query_rng(count);
        std::uniform_int_distribution<std::uint32_t> value(0, 255);
        for (int q = 0; q < 25; ++q) {
            const std::vector<std::uint32_t> raw{value(query_rng), value(query_rng)};
            const AngleState query = encode_point(raw, {8, 2});

            SearchTrace trace;
            const auto queue = index.search(query, 5, &trace);
            const auto replay = oracles::replay_search(index, query, 5);

            REQUIRE(trace.size() == replay.steps.size());
            for (std::size_t s = 0; s < trace.size(); ++s) {
                CHECK(trace[s].layer == replay.steps[s].layer);
                CHECK(trace[s].candidates == replay.steps[s].candidates);
                CHECK(trace[s].selected == replay.steps[s].selected);
                CHECK(std::abs(trace[s].dissimilarity -
                               replay.steps[s].dissimilarity) <= 1e-12);
            }

            auto got = queue.sorted();
            auto expected = replay.queue;
            std::sort(expected.begin(), expected.end(),
                      [](const NeighborQueue::Entry& a, const NeighborQueue::Entry& b) {
                          if (a.dissimilarity != b.dissimilarity)
                              return a.dissimilarity < b.dissimilarity;
                          return a.id < b.id;
                      });
            REQUIRE(got.size() == expected.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].id == expected[i].id);
                CHECK(std::abs(got[i].dissimilarity - expected[i].dissimilarity) <=
                      1e-12);
            }
            ++checked;
        }
    }
    CHECK(checked == 100);
}

TEST_CASE("per-search similarity evaluations stay within the layer bound") {
    const auto index = build_index(256, 9);
    const double m = index.params().max_neighbors;
    const double bound = (m * m + m + 1) * (index.max_level() + 1) +
                         static_cast<double>(index.layer(index.top_layer()).nodes.size());
    Rng query_rng(77);
    std::uniform_int_distribution<std::uint32_t> value(0, 255);
    for (int q = 0; q < 20; ++q) {
        const AngleState query =
            encode_point(std::vector<std::uint32_t>{value(query_rng), value(query_rng)},
                         {8, 2});
        const auto before = index.counter_snapshot();
        SearchTrace trace;
        index.search(query, 5, &trace);
        const auto delta = index.counter_snapshot() - before;
        CHECK(static_cast<double>(delta.similarity_evals) <= bound);

        // Independent recount of batch evaluations from the replayed
        // candidate sets (counter integrity).
        const auto replay = oracles::replay_search(index, query, 5);
        CHECK(delta.similarity_evals == replay.evaluations);
    }
}

TEST_CASE("one-dimensional descent ends on a local minimum of encoded distance") {
    IndexParams params;
    const auto index = build_index(32, 21, params, 1);
    Rng query_rng(4);
    std::uniform_int_distribution<std::uint32_t> value(0, 255);
    for (int q = 0; q < 30; ++q) {
        const std::vector<std::uint32_t> raw{value(query_rng)};
        const AngleState query = encode_point(raw, {8, 1});
        SearchTrace trace;
        index.search(query, 3, &trace);
        const auto& last = trace.back();
        CHECK(last.layer == 0);
        const double chosen_gap =
            std::abs(index.encoded(last.selected).angles[0] - query.angles[0]);
        for (std::uint32_t id : last.candidates)
            CHECK(chosen_gap <=
                  std::abs(index.encoded(id).angles[0] - query.angles[0]) + 1e-15);
    }
}

TEST_CASE("identical seeds rebuild identical indexes and traces") {
    const auto a = build_index(48, 33);
    const auto b = build_index(48, 33);
    CHECK(a.structurally_equal(b));
    const AngleState query = encode_point(std::vector<std::uint32_t>{100, 40}, {8, 2});
    SearchTrace ta, tb;
    const auto qa = a.search(query, 4, &ta);
    const auto qb = b.search(query, 4, &tb);
    CHECK(qa.entries() == qb.entries());
    REQUIRE(ta.size() == tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        CHECK(ta[i].selected == tb[i].selected);
        CHECK(ta[i].candidates == tb[i].candidates);
    }
}

TEST_CASE("full-layer candidate scope changes construction but not invariants") {
    IndexParams narrow;
    IndexParams full;
    full.full_layer_candidates = true;
    bool any_difference = false;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto a = build_index(48, 4000 + seed, narrow);
        const auto b = build_index(48, 4000 + seed, full);
        check_structure(b);
        IndexParams a_with_flag = a.params();
        a_with_flag.full_layer_candidates = true;
        any_difference |= !(a_with_flag == b.params()) || a.layers() != b.layers();
    }
    CHECK(any_difference);  // the whole-layer scope picks different neighbors
}

TEST_CASE("neighbor queue keeps the k best under the displacement rule") {
    NeighborQueue queue(2);
    CHECK(queue.push(0.4, 1));
    CHECK(queue.push(0.1, 2));
    CHECK(queue.size() == 2);
    // 0.3 <= worst 0.4: the worst entry is displaced.
    CHECK(queue.push(0.3, 3));
    auto sorted = queue.sorted();
    CHECK(sorted[0].id == 2);
    CHECK(sorted[1].id == 3);
    // 0.5 > worst 0.3: rejected.
    CHECK_FALSE(queue.push(0.5, 4));
    CHECK(queue.sorted() == sorted);
    // Equal to the worst: accepted, displacing it.
    CHECK(queue.push(0.3, 5));
    CHECK(queue.sorted()[1].id == 5);
    CHECK_THROWS_AS(NeighborQueue(0), std::invalid_argument);
}

TEST_CASE("serialization round-trips structurally") {
    SUBCASE("empty index") {
        IndexParams params;
        HierarchicalIndex index({}, params);
        std::stringstream stream;
        serialize(index, stream);
        const auto restored = deserialize(stream);
        CHECK(index.structurally_equal(restored));
        CHECK(restored.ball_count() == 0);
    }

    SUBCASE("populated index") {
        IndexParams params;
        params.backend = {BackendMode::Sampled, 2048, 99};
        params.cmp_bits = 12;
        const auto index = build_index(64, 13, params);
        std::stringstream stream;
        serialize(index, stream);
        const auto restored = deserialize(stream);
        CHECK(index.structurally_equal(restored));
        CHECK(restored.params() == index.params());
        CHECK(restored.inserted_count() == 64);
        CHECK(restored.entry_point() == index.entry_point());

        // Same bytes on every serialization of the same build.
        std::stringstream again;
        serialize(index, again);
        CHECK(stream.str() == again.str());

        // Restored index behaves identically.
        const AngleState query =
            encode_point(std::vector<std::uint32_t>{120, 130}, {8, 2});
        CHECK(index.search(query, 3).entries() ==
              restored.search(query, 3).entries());
    }
}

TEST_CASE("deserialization rejects malformed input") {
    const auto index = build_index(16, 17);
    std::stringstream stream;
    serialize(index, stream);
    const std::string bytes = stream.str();

    SUBCASE("truncated stream") {
        const std::size_t cuts[] = {0, 4, 11, bytes.size() / 2, bytes.size() - 1};
        for (std::size_t cut : cuts) {
            std::stringstream truncated(bytes.substr(0, cut));
            CHECK_THROWS_AS(deserialize(truncated), ParseError);
        }
    }

    SUBCASE("bad magic") {
        std::string corrupt = bytes;
        corrupt[0] = 'X';
        std::stringstream stream_bad(corrupt);
        try {
            deserialize(stream_bad);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.position() == 4);
        }
    }
}

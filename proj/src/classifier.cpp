#include "gbq/classifier.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "binary_io.hpp"

namespace gbq {

namespace {

constexpr std::uint32_t kModelMagic = 0x4d514247u;    // "GBQM"
constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint32_t kModelTrailer = 0x2e444e45u;  // "END."

constexpr std::uint64_t kGenerationTag = 0x67656e62ull;
constexpr std::uint64_t kLevelTag = 0x6c65766cull;
constexpr std::uint64_t kBackendTag = 0x73696d73ull;

}  // namespace

ClassifierModel::ClassifierModel(HierarchicalIndex index, FitConfig config,
                                 FitStats stats)
    : index_(std::move(index)), config_(config), stats_(stats) {
    std::set<int> labels;
    for (const GranularBall& ball : index_.balls()) labels.insert(ball.label);
    label_ids_.assign(labels.begin(), labels.end());
}

void ClassifierModel::set_k(std::size_t k) {
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    config_.k = k;
}

void ClassifierModel::set_label_names(std::vector<std::string> names) {
    if (!names.empty() && names.size() != label_ids_.size())
        throw std::invalid_argument("label name count mismatch");
    label_names_ = std::move(names);
}

std::string ClassifierModel::label_name(int label_id) const {
    auto it = std::lower_bound(label_ids_.begin(), label_ids_.end(), label_id);
    if (it != label_ids_.end() && *it == label_id && !label_names_.empty())
        return label_names_[static_cast<std::size_t>(it - label_ids_.begin())];
    return std::to_string(label_id);
}

ClassifierModel fit(const std::vector<LabeledPoint>& dataset,
                    const FitConfig& config) {
    Rng generation_rng(derive_seed(config.seed, kGenerationTag));
    GenerateResult generated =
        generate(dataset, config.purity_threshold, generation_rng);

    IndexParams params;
    params.max_neighbors = config.max_neighbors;
    params.bits = config.bits;
    params.backend = config.backend;
    params.backend.seed = derive_seed(config.seed, kBackendTag);
    params.cmp_bits = config.cmp_bits;
    params.level_seed = derive_seed(config.seed, kLevelTag);
    params.full_layer_candidates = config.full_layer_candidates;

    HierarchicalIndex index(std::move(generated.balls), params);
    index.build_all();

    FitStats stats;
    stats.n_points = dataset.size();
    stats.n_balls = index.ball_count();
    stats.generation_splits = generated.split_count;
    const CounterSnapshot counters = index.counter_snapshot();
    stats.build_similarity_evals = counters.similarity_evals;
    stats.build_comparator_calls = counters.comparator_calls;

    return ClassifierModel(std::move(index), config, stats);
}

int majority_vote(std::span<const std::pair<double, int>> votes) {
    if (votes.empty()) throw std::invalid_argument("empty vote set");
    std::map<int, std::pair<std::size_t, double>> tally;  // label -> (count, dissimilarity sum)
    for (const auto& [dissimilarity, label] : votes) {
        auto& t = tally[label];
        ++t.first;
        t.second += dissimilarity;
    }
    // Highest count wins; ties fall to the smallest summed dissimilarity and
    // then the lowest label id (map order).
    auto best = tally.begin();
    for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
        if (it->second.first > best->second.first ||
            (it->second.first == best->second.first &&
             it->second.second < best->second.second)) {
            best = it;
        }
    }
    return best->first;
}

int predict(const ClassifierModel& model, std::span<const std::uint32_t> point) {
    const HierarchicalIndex& index = model.index();
    if (point.size() != index.dim())
        throw std::invalid_argument("dimension mismatch");
    const EncodingParams enc{model.config().bits, static_cast<int>(index.dim())};
    const AngleState query = encode_point(point, enc);
    const NeighborQueue queue = index.search(query, model.config().k);

    // The descent can pick the same ball on several layers; collapse
    // duplicates before voting, keeping each ball's best dissimilarity.
    std::map<std::uint32_t, double> best;
    for (const auto& entry : queue.entries()) {
        auto [it, fresh] = best.emplace(entry.id, entry.dissimilarity);
        if (!fresh && entry.dissimilarity < it->second)
            it->second = entry.dissimilarity;
    }
    std::vector<std::pair<double, int>> votes;
    votes.reserve(best.size());
    for (const auto& [id, dissimilarity] : best)
        votes.emplace_back(dissimilarity, index.ball(id).label);
    return majority_vote(votes);
}

std::vector<int> predict_batch(const ClassifierModel& model,
                               const std::vector<std::vector<std::uint32_t>>& points) {
    std::vector<int> labels;
    labels.reserve(points.size());
    for (const auto& point : points) labels.push_back(predict(model, point));
    return labels;
}

void save_model(const ClassifierModel& model, std::ostream& out) {
    detail::Writer w(out);
    w.u32(kModelMagic);
    w.u32(kModelVersion);

    const FitConfig& c = model.config();
    w.f64(c.purity_threshold);
    w.u32(c.max_neighbors);
    w.u64(c.k);
    w.i32(c.bits);
    w.u8(c.backend.mode == BackendMode::Sampled ? 1 : 0);
    w.u64(c.backend.shots);
    w.u64(c.backend.seed);
    w.i32(c.cmp_bits);
    w.u64(c.seed);
    w.u8(c.full_layer_candidates ? 1 : 0);

    const FitStats& s = model.stats();
    w.u64(s.n_points);
    w.u64(s.n_balls);
    w.u64(s.generation_splits);
    w.u64(s.build_similarity_evals);
    w.u64(s.build_comparator_calls);

    w.u32(static_cast<std::uint32_t>(model.label_names().size()));
    for (const std::string& name : model.label_names()) w.str(name);

    const auto& bounds = model.bounds();
    w.u8(bounds ? 1 : 0);
    if (bounds) {
        w.u32(static_cast<std::uint32_t>(bounds->lo.size()));
        for (std::size_t j = 0; j < bounds->lo.size(); ++j) {
            w.f64(bounds->lo[j]);
            w.f64(bounds->hi[j]);
        }
    }

    serialize(model.index(), out);
    w.u32(kModelTrailer);
}

ClassifierModel load_model(std::istream& in) {
    detail::Reader r(in);
    if (r.u32() != kModelMagic) r.fail("bad magic");
    if (r.u32() != kModelVersion) r.fail("unsupported version");

    FitConfig config;
    config.purity_threshold = r.f64();
    config.max_neighbors = r.u32();
    config.k = r.u64();
    config.bits = r.i32();
    config.backend.mode = r.u8() ? BackendMode::Sampled : BackendMode::Exact;
    config.backend.shots = r.u64();
    config.backend.seed = r.u64();
    config.cmp_bits = r.i32();
    config.seed = r.u64();
    config.full_layer_candidates = r.u8() != 0;

    FitStats stats;
    stats.n_points = r.u64();
    stats.n_balls = r.u64();
    stats.generation_splits = r.u64();
    stats.build_similarity_evals = r.u64();
    stats.build_comparator_calls = r.u64();

    const std::uint32_t name_count = r.u32();
    std::vector<std::string> names;
    names.reserve(name_count);
    for (std::uint32_t i = 0; i < name_count; ++i) names.push_back(r.str());

    std::optional<QuantizationBounds> bounds;
    if (r.u8()) {
        QuantizationBounds b;
        const std::uint32_t dim = r.u32();
        b.lo.reserve(dim);
        b.hi.reserve(dim);
        for (std::uint32_t j = 0; j < dim; ++j) {
            b.lo.push_back(r.f64());
            b.hi.push_back(r.f64());
        }
        bounds = std::move(b);
    }

    HierarchicalIndex index = deserialize(in);
    // The embedded index was consumed by its own reader; the trailer follows.
    detail::Reader tail(in);
    if (tail.u32() != kModelTrailer)
        throw ParseError("bad trailer", r.offset());

    ClassifierModel model(std::move(index), config, stats);
    if (!names.empty()) model.set_label_names(std::move(names));
    if (bounds) model.set_bounds(std::move(*bounds));
    return model;
}

}  // namespace gbq

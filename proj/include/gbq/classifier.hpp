#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gbq/index.hpp"

namespace gbq {

struct FitConfig {
    double purity_threshold = 1.0;  // T
    std::uint32_t max_neighbors = 4;
    std::size_t k = 5;
    int bits = 8;
    SimilarityBackend backend{};
    int cmp_bits = 16;
    std::uint64_t seed = 0;
    bool full_layer_candidates = false;

    bool operator==(const FitConfig&) const = default;
};

struct FitStats {
    std::size_t n_points = 0;  // N
    std::size_t n_balls = 0;   // M
    std::size_t generation_splits = 0;
    std::uint64_t build_similarity_evals = 0;
    std::uint64_t build_comparator_calls = 0;

    bool operator==(const FitStats&) const = default;
};

// Per-feature quantization interval used when raw data was mapped onto the
// integer grid; persisted with the model so queries reuse it.
struct QuantizationBounds {
    std::vector<double> lo;
    std::vector<double> hi;

    bool operator==(const QuantizationBounds&) const = default;
};

class ClassifierModel {
public:
    ClassifierModel(HierarchicalIndex index, FitConfig config, FitStats stats);

    const HierarchicalIndex& index() const noexcept { return index_; }
    const FitConfig& config() const noexcept { return config_; }
    const FitStats& stats() const noexcept { return stats_; }

    // k is a query-time knob; adjusting it does not touch the index.
    void set_k(std::size_t k);

    // Distinct ball labels, ascending.
    const std::vector<int>& label_ids() const noexcept { return label_ids_; }

    // Optional human-readable names, parallel to label_ids.
    const std::vector<std::string>& label_names() const noexcept { return label_names_; }
    void set_label_names(std::vector<std::string> names);
    std::string label_name(int label_id) const;

    const std::optional<QuantizationBounds>& bounds() const noexcept { return bounds_; }
    void set_bounds(QuantizationBounds bounds) { bounds_ = std::move(bounds); }

private:
    HierarchicalIndex index_;
    FitConfig config_;
    FitStats stats_;
    std::vector<int> label_ids_;
    std::vector<std::string> label_names_;
    std::optional<QuantizationBounds> bounds_;
};

// Generates granular-balls at the configured purity threshold, encodes their
// centers and builds the index over them. All rng streams derive from
// config.seed.
ClassifierModel fit(const std::vector<LabeledPoint>& dataset, const FitConfig& config);

// Winning label of a vote set of (dissimilarity, label) pairs: highest
// count, then smallest summed dissimilarity, then lowest label id.
int majority_vote(std::span<const std::pair<double, int>> votes);

// Search with the fitted k, collapse duplicate balls (keeping each ball's
// best dissimilarity) and majority-vote the ball labels.
int predict(const ClassifierModel& model, std::span<const std::uint32_t> point);

std::vector<int> predict_batch(const ClassifierModel& model,
                               const std::vector<std::vector<std::uint32_t>>& points);

void save_model(const ClassifierModel& model, std::ostream& out);
ClassifierModel load_model(std::istream& in);

}  // namespace gbq

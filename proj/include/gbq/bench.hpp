#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gbq/index.hpp"
#include "gbq/quantum.hpp"

namespace gbq {

// Exact top-k by dissimilarity over every ball, ascending, ties by lowest
// id. Ground-truth oracle for the hierarchical search.
std::vector<ScoredCandidate> brute_force_knn(std::span<const AngleState> balls,
                                             const AngleState& query,
                                             std::size_t k,
                                             const SimilarityBackend& backend);

// |result ∩ oracle| / |oracle|.
double recall_at_k(std::span<const std::uint32_t> result_ids,
                   std::span<const std::uint32_t> oracle_ids);

struct ScalingConfig {
    std::vector<std::size_t> sizes{256, 1024, 4096, 16384};  // ball counts M
    std::size_t seeds = 5;
    std::uint64_t base_seed = 1;
    std::size_t queries = 50;
    std::uint32_t max_neighbors = 4;
    std::size_t k = 5;
    int bits = 8;
    std::size_t dim = 2;
    std::size_t classes = 2;
    double separation = 8.0;
    double spread = 1.0;
    SimilarityBackend backend{};
    int cmp_bits = 16;
    bool full_layer_candidates = false;
};

// One (M, seed) grid cell. Carries everything needed to reproduce the run.
struct BenchRecord {
    std::size_t ball_count = 0;  // M
    std::size_t n_points = 0;    // N fed to the cell (== M here)
    std::size_t dim = 0;
    std::uint32_t max_neighbors = 0;
    std::size_t k = 0;
    std::string backend;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;

    std::uint64_t build_similarity_evals = 0;
    std::uint64_t build_comparator_calls = 0;
    std::uint64_t qram_cost_units = 0;  // similarity evals x ceil(log2 M)
    double mean_search_evals = 0.0;
    double median_search_evals = 0.0;
    double mean_search_comparator_calls = 0.0;
    double accuracy = 0.0;
    double recall = 0.0;  // recall@k vs brute force over balls
    double build_wall_ms = 0.0;
    double mean_search_wall_us = 0.0;
};

struct RegressionFit {
    // OLS fits of mean per-search similarity evaluations.
    double r2_vs_log_m = 0.0;
    double r2_vs_m = 0.0;
    double slope_vs_log_m = 0.0;
    double intercept_vs_log_m = 0.0;
    // Build cost normalization c = evals / (M log2 M) across the grid.
    double build_c_min = 0.0;
    double build_c_max = 0.0;
};

struct BenchReport {
    ScalingConfig config;
    std::vector<BenchRecord> records;
    RegressionFit fit;
};

// Builds a singleton-ball index per (M, seed) cell from blob draws, runs the
// query set, and aggregates similarity/comparator counters plus the scaling
// regressions.
BenchReport run_scaling(const ScalingConfig& config);

// Identical fields in both formats; wall-time fields are the only
// run-dependent ones.
void write_report_json(const BenchReport& report, std::ostream& out);
void write_report_csv(const BenchReport& report, std::ostream& out);

}  // namespace gbq

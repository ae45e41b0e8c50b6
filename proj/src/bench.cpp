#include "gbq/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "gbq/classifier.hpp"
#include "gbq/dataset.hpp"

namespace gbq {

namespace {

constexpr std::uint64_t kCellTag = 0x63656c6cull;
constexpr std::uint64_t kLevelTag = 0x6c65766cull;
constexpr std::uint64_t kBackendTag = 0x73696d73ull;
constexpr std::uint64_t kQueryTag = 0x71757279ull;

double mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

struct Ols {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

Ols fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    Ols ols;
    if (n < 2) return ols;
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return ols;
    ols.slope = sxy / sxx;
    ols.intercept = my - ols.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (ols.intercept + ols.slope * x[i]);
        ss_res += r * r;
    }
    ols.r2 = 1.0 - ss_res / syy;
    return ols;
}

std::uint32_t ceil_log2(std::size_t n) {
    std::uint32_t bits = 0;
    std::size_t v = 1;
    while (v < n) {
        v <<= 1;
        ++bits;
    }
    return bits;
}

std::vector<std::uint32_t> unique_ids(const NeighborQueue& queue) {
    std::set<std::uint32_t> ids;
    for (const auto& entry : queue.entries()) ids.insert(entry.id);
    return {ids.begin(), ids.end()};
}

nlohmann::json record_json(const BenchRecord& r) {
    return {{"M", r.ball_count},
            {"N", r.n_points},
            {"d", r.dim},
            {"m", r.max_neighbors},
            {"k", r.k},
            {"backend", r.backend},
            {"shots", r.shots},
            {"seed", r.seed},
            {"build_similarity_evals", r.build_similarity_evals},
            {"build_comparator_calls", r.build_comparator_calls},
            {"qram_cost_units", r.qram_cost_units},
            {"mean_search_evals", r.mean_search_evals},
            {"median_search_evals", r.median_search_evals},
            {"mean_search_comparator_calls", r.mean_search_comparator_calls},
            {"accuracy", r.accuracy},
            {"recall", r.recall},
            {"build_wall_ms", r.build_wall_ms},
            {"mean_search_wall_us", r.mean_search_wall_us}};
}

const char* const kRecordColumns[] = {
    "M", "N", "d", "m", "k", "backend", "shots", "seed",
    "build_similarity_evals", "build_comparator_calls", "qram_cost_units",
    "mean_search_evals", "median_search_evals", "mean_search_comparator_calls",
    "accuracy", "recall", "build_wall_ms", "mean_search_wall_us"};

nlohmann::json config_json(const ScalingConfig& c) {
    return {{"sizes", c.sizes},
            {"seeds", c.seeds},
            {"base_seed", c.base_seed},
            {"queries", c.queries},
            {"m", c.max_neighbors},
            {"k", c.k},
            {"bits", c.bits},
            {"dim", c.dim},
            {"classes", c.classes},
            {"separation", c.separation},
            {"spread", c.spread},
            {"backend", c.backend.mode == BackendMode::Sampled ? "sampled" : "exact"},
            {"shots", c.backend.shots},
            {"cmp_bits", c.cmp_bits},
            {"full_layer_candidates", c.full_layer_candidates}};
}

nlohmann::json fit_json(const RegressionFit& f) {
    return {{"r2_vs_log_m", f.r2_vs_log_m},
            {"r2_vs_m", f.r2_vs_m},
            {"slope_vs_log_m", f.slope_vs_log_m},
            {"intercept_vs_log_m", f.intercept_vs_log_m},
            {"build_c_min", f.build_c_min},
            {"build_c_max", f.build_c_max}};
}

}  // namespace

std::vector<ScoredCandidate> brute_force_knn(std::span<const AngleState> balls,
                                             const AngleState& query,
                                             std::size_t k,
                                             const SimilarityBackend& backend) {
    if (balls.empty()) throw std::invalid_argument("empty ball set");
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    auto scored = similarity_batch(balls, query, backend);
    std::sort(scored.begin(), scored.end(),
              [](const ScoredCandidate& a, const ScoredCandidate& b) {
                  if (a.dissimilarity != b.dissimilarity)
                      return a.dissimilarity < b.dissimilarity;
                  return a.index < b.index;
              });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

double recall_at_k(std::span<const std::uint32_t> result_ids,
                   std::span<const std::uint32_t> oracle_ids) {
    if (result_ids.empty() || oracle_ids.empty())
        throw std::invalid_argument("empty id set");
    const std::set<std::uint32_t> result(result_ids.begin(), result_ids.end());
    std::size_t hits = 0;
    for (std::uint32_t id : oracle_ids) hits += result.count(id);
    return static_cast<double>(hits) / static_cast<double>(oracle_ids.size());
}

BenchReport run_scaling(const ScalingConfig& config) {
    using clock = std::chrono::steady_clock;
    BenchReport report;
    report.config = config;

    for (std::size_t size : config.sizes) {
        for (std::size_t s = 0; s < config.seeds; ++s) {
            const std::uint64_t cell_seed =
                derive_seed(config.base_seed, kCellTag ^ size, s);

            // One singleton ball per blob point pins the ball count exactly.
            const std::size_t per_class =
                (size + config.classes - 1) / config.classes;
            Dataset train = make_blobs(per_class, config.classes, config.dim,
                                       config.separation, config.spread, cell_seed);
            train.records.resize(size);
            const QuantizeResult quantized =
                quantize_dataset(train, config.bits, std::nullopt);

            std::vector<GranularBall> balls;
            balls.reserve(size);
            for (const LabeledPoint& p : quantized.points) {
                GranularBall ball;
                ball.center.assign(p.features.begin(), p.features.end());
                ball.radius = 0.0;
                ball.label = p.label;
                ball.purity = 1.0;
                ball.member_count = 1;
                balls.push_back(std::move(ball));
            }

            IndexParams params;
            params.max_neighbors = config.max_neighbors;
            params.bits = config.bits;
            params.backend = config.backend;
            params.backend.seed = derive_seed(cell_seed, kBackendTag);
            params.cmp_bits = config.cmp_bits;
            params.level_seed = derive_seed(cell_seed, kLevelTag);
            params.full_layer_candidates = config.full_layer_candidates;
            HierarchicalIndex index(std::move(balls), params);

            const auto build_start = clock::now();
            index.build_all();
            const auto build_end = clock::now();
            const CounterSnapshot build_counters = index.counter_snapshot();

            Dataset query_set =
                make_blobs((config.queries + config.classes - 1) / config.classes,
                           config.classes, config.dim, config.separation,
                           config.spread, derive_seed(cell_seed, kQueryTag));
            query_set.records.resize(config.queries);
            const QuantizeResult queries = quantize_dataset(
                query_set, config.bits, quantized.bounds, quantized.label_names);

            const EncodingParams enc{config.bits, static_cast<int>(config.dim)};
            const SimilarityBackend exact_backend{};  // ground-truth oracle
            std::vector<double> evals, comparator_calls, walls, recalls, correct;
            CounterSnapshot before = index.counter_snapshot();
            for (const LabeledPoint& q : queries.points) {
                const AngleState encoded = encode_point(q.features, enc);
                const auto t0 = clock::now();
                const NeighborQueue queue = index.search(encoded, config.k);
                const auto t1 = clock::now();
                const CounterSnapshot after = index.counter_snapshot();
                const CounterSnapshot delta = after - before;
                before = after;
                evals.push_back(static_cast<double>(delta.similarity_evals));
                comparator_calls.push_back(static_cast<double>(delta.comparator_calls));
                walls.push_back(
                    std::chrono::duration<double, std::micro>(t1 - t0).count());

                const auto oracle = brute_force_knn(index.encoded_states(),
                                                    encoded, config.k, exact_backend);
                std::vector<std::uint32_t> oracle_ids;
                oracle_ids.reserve(oracle.size());
                for (const auto& o : oracle) oracle_ids.push_back(o.index);
                recalls.push_back(recall_at_k(unique_ids(queue), oracle_ids));

                std::vector<std::pair<double, int>> votes;
                std::set<std::uint32_t> seen;
                for (const auto& entry : queue.sorted())
                    if (seen.insert(entry.id).second)
                        votes.emplace_back(entry.dissimilarity,
                                           index.ball(entry.id).label);
                correct.push_back(majority_vote(votes) == q.label ? 1.0 : 0.0);
            }

            BenchRecord record;
            record.ball_count = index.ball_count();
            record.n_points = size;
            record.dim = config.dim;
            record.max_neighbors = config.max_neighbors;
            record.k = config.k;
            record.backend =
                config.backend.mode == BackendMode::Sampled ? "sampled" : "exact";
            record.shots = config.backend.shots;
            record.seed = cell_seed;
            record.build_similarity_evals = build_counters.similarity_evals;
            record.build_comparator_calls = build_counters.comparator_calls;
            record.qram_cost_units =
                build_counters.similarity_evals * ceil_log2(index.ball_count());
            record.mean_search_evals = mean(evals);
            record.median_search_evals = median(evals);
            record.mean_search_comparator_calls = mean(comparator_calls);
            record.accuracy = mean(correct);
            record.recall = mean(recalls);
            record.build_wall_ms =
                std::chrono::duration<double, std::milli>(build_end - build_start)
                    .count();
            record.mean_search_wall_us = mean(walls);
            report.records.push_back(std::move(record));
        }
    }

    std::vector<double> log_m, lin_m, y, build_c;
    for (const BenchRecord& r : report.records) {
        const double m = static_cast<double>(r.ball_count);
        log_m.push_back(std::log2(m));
        lin_m.push_back(m);
        y.push_back(r.mean_search_evals);
        const double denom = m * std::max(std::log2(m), 1.0);
        build_c.push_back(static_cast<double>(r.build_similarity_evals) / denom);
    }
    const Ols log_fit = fit_line(log_m, y);
    const Ols lin_fit = fit_line(lin_m, y);
    report.fit.r2_vs_log_m = log_fit.r2;
    report.fit.r2_vs_m = lin_fit.r2;
    report.fit.slope_vs_log_m = log_fit.slope;
    report.fit.intercept_vs_log_m = log_fit.intercept;
    if (!build_c.empty()) {
        report.fit.build_c_min = *std::min_element(build_c.begin(), build_c.end());
        report.fit.build_c_max = *std::max_element(build_c.begin(), build_c.end());
    }
    return report;
}

void write_report_json(const BenchReport& report, std::ostream& out) {
    nlohmann::json j;
    j["type"] = "bench-report";
    j["config"] = config_json(report.config);
    j["records"] = nlohmann::json::array();
    for (const BenchRecord& r : report.records) j["records"].push_back(record_json(r));
    j["fit"] = fit_json(report.fit);
    out << j.dump(2) << "\n";
}

void write_report_csv(const BenchReport& report, std::ostream& out) {
    nlohmann::json header;
    header["type"] = "bench-report";
    header["config"] = config_json(report.config);
    header["fit"] = fit_json(report.fit);
    header["columns"] = kRecordColumns;
    out << header.dump() << "\n";
    for (const BenchRecord& r : report.records) {
        const nlohmann::json j = record_json(r);
        bool first = true;
        for (const char* column : kRecordColumns) {
            if (!first) out << ',';
            first = false;
            const auto& v = j.at(column);
            if (v.is_string())
                out << v.get<std::string>();
            else
                out << v.dump();
        }
        out << "\n";
    }
}

}  // namespace gbq

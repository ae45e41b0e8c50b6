// Command-line front end: granular-ball generation, index construction,
// search, classification and the scaling benchmark.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gbq/bench.hpp"
#include "gbq/classifier.hpp"
#include "gbq/dataset.hpp"
#include "gbq/granular_ball.hpp"
#include "gbq/index.hpp"

namespace {

using nlohmann::json;

// JSON object config files: top-level keys feed the main app, nested objects
// feed the subcommand of the same name.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json parsed;
        try {
            input >> parsed;
        } catch (const json::parse_error& e) {
            throw CLI::ConfigError(std::string("invalid JSON config: ") + e.what());
        }
        if (!parsed.is_object())
            throw CLI::ConfigError("config root must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        flatten(parsed, {}, items);
        return items;
    }

private:
    static std::string scalar(const json& value) {
        if (value.is_string()) return value.get<std::string>();
        if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
        return value.dump();
    }

    static void flatten(const json& node, std::vector<std::string> parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (auto it = node.begin(); it != node.end(); ++it) {
            const json& value = it.value();
            if (value.is_object()) {
                auto nested = parents;
                nested.push_back(it.key());
                flatten(value, std::move(nested), items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = it.key();
            if (value.is_array())
                for (const auto& element : value) item.inputs.push_back(scalar(element));
            else
                item.inputs.push_back(scalar(value));
            items.push_back(std::move(item));
        }
    }
};

struct CsvOptions {
    std::string label_column;  // name, index, or "none"
    bool no_header = false;
};

void add_csv_options(CLI::App* cmd, CsvOptions& opts) {
    cmd->add_option("--label-col", opts.label_column,
                    "Label column (name, zero-based index, or 'none'); default: last column");
    cmd->add_flag("--no-header", opts.no_header, "Treat the first row as data");
}

gbq::CsvSpec make_spec(const CsvOptions& opts, std::size_t column_count_hint = 0) {
    gbq::CsvSpec spec;
    if (opts.no_header) spec.header = gbq::HeaderMode::Absent;
    if (!opts.label_column.empty()) {
        if (opts.label_column == "none") {
            spec.label.index = column_count_hint;  // one past the end
        } else {
            try {
                std::size_t pos = 0;
                const unsigned long idx = std::stoul(opts.label_column, &pos);
                if (pos == opts.label_column.size())
                    spec.label.index = idx;
                else
                    spec.label.name = opts.label_column;
            } catch (const std::exception&) {
                spec.label.name = opts.label_column;
            }
        }
    }
    return spec;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::size_t probe_column_count(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        std::string trimmed = line;
        while (!trimmed.empty() &&
               (trimmed.back() == '\r' || trimmed.back() == ' '))
            trimmed.pop_back();
        if (trimmed.empty()) continue;
        if (trimmed.front() == '{') {
            const json header = json::parse(trimmed);
            if (header.contains("columns"))
                return header["columns"].size();
            continue;
        }
        return static_cast<std::size_t>(
                   std::count(trimmed.begin(), trimmed.end(), ',')) + 1;
    }
    return 0;
}

// Query tables may or may not carry a label column; pick by column count
// against the model dimension.
gbq::Dataset load_query_table(const std::string& path, std::size_t model_dim,
                              const CsvOptions& opts) {
    const std::string content = slurp(path);
    const std::size_t columns = probe_column_count(content);
    CsvOptions effective = opts;
    if (opts.label_column.empty() && columns == model_dim)
        effective.label_column = "none";
    std::istringstream in(content);
    const gbq::Dataset data = gbq::load_table(in, make_spec(effective, columns));
    if (!data.records.empty() && data.records.front().features.size() != model_dim)
        throw std::runtime_error(
            "query file has " +
            std::to_string(data.records.front().features.size()) +
            " feature columns, the model expects " + std::to_string(model_dim));
    return data;
}

// Quantize query features onto the model grid; labels ride along untouched.
std::vector<std::vector<std::uint32_t>> quantize_queries(
    const gbq::ClassifierModel& model, const gbq::Dataset& data) {
    gbq::Dataset features_only = data;
    for (auto& record : features_only.records) record.label.clear();
    features_only.label_name.clear();

    gbq::QuantizationBounds bounds;
    if (model.bounds()) {
        bounds = *model.bounds();
    } else {
        const double top = gbq::max_encodable(model.config().bits);
        bounds.lo.assign(model.index().dim(), 0.0);
        bounds.hi.assign(model.index().dim(), top);
    }
    const auto quantized =
        gbq::quantize_dataset(features_only, model.config().bits, bounds, {""});
    std::vector<std::vector<std::uint32_t>> points;
    points.reserve(quantized.points.size());
    for (const auto& p : quantized.points) points.push_back(p.features);
    return points;
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw std::runtime_error("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

gbq::SimilarityBackend make_backend(const std::string& mode, std::uint64_t shots) {
    gbq::SimilarityBackend backend;
    backend.mode = mode == "sampled" ? gbq::BackendMode::Sampled
                                     : gbq::BackendMode::Exact;
    backend.shots = shots;
    return backend;
}

gbq::ClassifierModel read_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return gbq::load_model(in);
}

const auto kThresholdCheck =
    CLI::Validator(
        [](std::string& value) -> std::string {
            const double t = std::stod(value);
            if (!(t > 0.5) || t > 1.0) return "invalid threshold (needs 0.5 < T <= 1.0)";
            return {};
        },
        "T in (0.5, 1.0]");

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Granular-ball quantum kNN: dataset reduction, hierarchical "
                 "small-world indexing and classification with simulated "
                 "swap-test similarity"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file (flags override it)");

    // ---- make-blobs ----
    struct {
        std::size_t per_class = 100, classes = 2, dim = 2;
        double separation = 10.0, spread = 1.0;
        std::uint64_t seed = 0;
        std::string output;
    } blobs;
    auto* make_blobs_cmd =
        app.add_subcommand("make-blobs", "Generate a Gaussian blob dataset");
    make_blobs_cmd->add_option("--per-class", blobs.per_class, "Points per class")
        ->check(CLI::PositiveNumber);
    make_blobs_cmd->add_option("--classes", blobs.classes, "Number of classes")
        ->check(CLI::PositiveNumber);
    make_blobs_cmd->add_option("--dim", blobs.dim, "Feature dimension")
        ->check(CLI::PositiveNumber);
    make_blobs_cmd->add_option("--separation", blobs.separation, "Center distance")
        ->check(CLI::NonNegativeNumber);
    make_blobs_cmd->add_option("--spread", blobs.spread, "Cluster sigma")
        ->check(CLI::NonNegativeNumber);
    make_blobs_cmd->add_option("--seed", blobs.seed, "RNG seed")->envname("GBQ_SEED");
    make_blobs_cmd->add_option("--output", blobs.output, "Output path (default stdout)");
    make_blobs_cmd->callback([&] {
        Output out(blobs.output);
        gbq::write_dataset(out.stream(),
                           gbq::make_blobs(blobs.per_class, blobs.classes, blobs.dim,
                                           blobs.separation, blobs.spread, blobs.seed));
    });

    // ---- gen-balls ----
    struct {
        std::string input, output;
        double threshold = 1.0;
        int bits = 8;
        std::uint64_t seed = 0;
        CsvOptions csv;
    } gen;
    auto* gen_cmd = app.add_subcommand(
        "gen-balls", "Reduce a labeled dataset to granular-balls");
    gen_cmd->add_option("--input", gen.input, "Input CSV")->required();
    gen_cmd->add_option("--purity-threshold", gen.threshold, "Purity threshold T")
        ->check(kThresholdCheck);
    gen_cmd->add_option("--bits", gen.bits, "Feature bits t_a")->check(CLI::Range(1, 16));
    gen_cmd->add_option("--seed", gen.seed, "RNG seed")->envname("GBQ_SEED");
    gen_cmd->add_option("--output", gen.output, "Output path (default stdout)");
    add_csv_options(gen_cmd, gen.csv);
    gen_cmd->callback([&] {
        const gbq::Dataset data = gbq::load_csv(gen.input, make_spec(gen.csv));
        const auto quantized = gbq::quantize_dataset(data, gen.bits);
        gbq::Rng rng(gen.seed);
        const auto result = gbq::generate(quantized.points, gen.threshold, rng);

        json header;
        header["type"] = "granular-balls";
        header["bits"] = gen.bits;
        header["purity_threshold"] = gen.threshold;
        header["balls"] = result.balls.size();
        header["points"] = quantized.points.size();
        header["splits"] = result.split_count;
        header["label_names"] = quantized.label_names;
        json columns = json::array();
        for (const auto& name : data.feature_names) columns.push_back(name);
        columns.push_back("radius");
        columns.push_back("label");
        columns.push_back("purity");
        columns.push_back("count");
        header["columns"] = std::move(columns);

        Output out(gen.output);
        out.stream() << header.dump() << "\n";
        for (const auto& ball : result.balls) {
            for (double c : ball.center) out.stream() << json(c).dump() << ',';
            out.stream() << json(ball.radius).dump() << ','
                         << quantized.label_names[static_cast<std::size_t>(ball.label)]
                         << ',' << json(ball.purity).dump() << ','
                         << ball.member_count << "\n";
        }
        std::cerr << "reduced " << quantized.points.size() << " points to "
                  << result.balls.size() << " balls in " << result.split_count
                  << " splits\n";
    });

    // ---- build ----
    struct {
        std::string input, index;
        double threshold = 1.0;
        int bits = 8;
        std::uint32_t max_neighbors = 4;
        std::size_t k = 5;
        std::string backend = "exact";
        std::uint64_t shots = 4096;
        int cmp_bits = 16;
        std::uint64_t seed = 0;
        bool full_layer = false;
        CsvOptions csv;
    } build;
    auto* build_cmd =
        app.add_subcommand("build", "Fit a model: granular-balls plus index");
    build_cmd->add_option("--input", build.input, "Training CSV")->required();
    build_cmd->add_option("--index", build.index, "Model output path")->required();
    build_cmd->add_option("--purity-threshold", build.threshold, "Purity threshold T")
        ->check(kThresholdCheck);
    build_cmd->add_option("--bits", build.bits, "Feature bits t_a")
        ->check(CLI::Range(1, 16));
    build_cmd->add_option("--max-neighbors", build.max_neighbors, "Degree cap m")
        ->check(CLI::PositiveNumber);
    build_cmd->add_option("--k", build.k, "Neighbors for classification")
        ->check(CLI::PositiveNumber);
    build_cmd->add_option("--backend", build.backend, "Similarity backend")
        ->check(CLI::IsMember({"exact", "sampled"}));
    build_cmd->add_option("--shots", build.shots, "Shots per swap test (sampled)")
        ->check(CLI::PositiveNumber);
    build_cmd->add_option("--cmp-bits", build.cmp_bits, "Comparator fixed-point bits q")
        ->check(CLI::Range(1, 52));
    build_cmd->add_option("--seed", build.seed, "RNG seed")->envname("GBQ_SEED");
    build_cmd->add_flag("--full-layer-candidates", build.full_layer,
                        "Whole-layer candidate scope during insertion");
    add_csv_options(build_cmd, build.csv);
    build_cmd->callback([&] {
        const gbq::Dataset data = gbq::load_csv(build.input, make_spec(build.csv));
        const auto quantized = gbq::quantize_dataset(data, build.bits);
        if (quantized.clamped)
            std::cerr << "warning: clamped " << quantized.clamped
                      << " out-of-range values\n";

        gbq::FitConfig config;
        config.purity_threshold = build.threshold;
        config.max_neighbors = build.max_neighbors;
        config.k = build.k;
        config.bits = build.bits;
        config.backend = make_backend(build.backend, build.shots);
        config.cmp_bits = build.cmp_bits;
        config.seed = build.seed;
        config.full_layer_candidates = build.full_layer;

        auto model = gbq::fit(quantized.points, config);
        model.set_label_names(quantized.label_names);
        model.set_bounds(quantized.bounds);

        std::ofstream out(build.index, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + build.index + "'");
        gbq::save_model(model, out);
        std::cerr << "fit " << model.stats().n_points << " points -> "
                  << model.stats().n_balls << " balls, "
                  << model.stats().build_similarity_evals
                  << " similarity evals during construction\n";
    });

    // ---- search ----
    struct {
        std::string index, input, output, format = "json";
        std::size_t k = 0;  // 0: use the model's k
        CsvOptions csv;
    } search;
    auto* search_cmd =
        app.add_subcommand("search", "Nearest granular-balls for each query row");
    search_cmd->add_option("--index", search.index, "Model path")->required();
    search_cmd->add_option("--input", search.input, "Query CSV")->required();
    search_cmd->add_option("--k", search.k, "Queue capacity (default: model k)");
    search_cmd->add_option("--output", search.output, "Output path (default stdout)");
    search_cmd->add_option("--format", search.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    add_csv_options(search_cmd, search.csv);
    search_cmd->callback([&] {
        const auto model = read_model(search.index);
        const auto data =
            load_query_table(search.input, model.index().dim(), search.csv);
        const auto points = quantize_queries(model, data);
        const std::size_t k = search.k ? search.k : model.config().k;
        const gbq::EncodingParams enc{model.config().bits,
                                      static_cast<int>(model.index().dim())};

        json results = json::array();
        for (std::size_t q = 0; q < points.size(); ++q) {
            const auto queue =
                model.index().search(gbq::encode_point(points[q], enc), k);
            // The descent can select a ball on several layers; report each
            // ball once at its best dissimilarity.
            json neighbors = json::array();
            std::set<std::uint32_t> seen;
            for (const auto& entry : queue.sorted()) {
                if (!seen.insert(entry.id).second) continue;
                neighbors.push_back(
                    {{"ball", entry.id},
                     {"dissimilarity", entry.dissimilarity},
                     {"label", model.label_name(
                                   model.index().ball(entry.id).label)}});
            }
            results.push_back({{"query", q}, {"neighbors", std::move(neighbors)}});
        }

        Output out(search.output);
        if (search.format == "json") {
            out.stream() << json{{"type", "search-results"}, {"k", k},
                                 {"results", std::move(results)}}
                                .dump(2)
                         << "\n";
        } else {
            json header{{"type", "search-results"},
                        {"k", k},
                        {"columns", {"query", "rank", "ball", "dissimilarity", "label"}}};
            out.stream() << header.dump() << "\n";
            for (const auto& r : results) {
                std::size_t rank = 0;
                for (const auto& n : r["neighbors"]) {
                    out.stream() << r["query"] << ',' << rank++ << ','
                                 << n["ball"] << ','
                                 << n["dissimilarity"].dump() << ','
                                 << n["label"].get<std::string>() << "\n";
                }
            }
        }
    });

    // ---- classify ----
    struct {
        std::string index, input, output, format = "json";
        std::size_t k = 0;
        CsvOptions csv;
    } classify;
    auto* classify_cmd =
        app.add_subcommand("classify", "Predict labels for each query row");
    classify_cmd->add_option("--index", classify.index, "Model path")->required();
    classify_cmd->add_option("--input", classify.input, "Query CSV")->required();
    classify_cmd->add_option("--k", classify.k, "Vote size (default: model k)");
    classify_cmd->add_option("--output", classify.output, "Output path (default stdout)");
    classify_cmd->add_option("--format", classify.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    add_csv_options(classify_cmd, classify.csv);
    classify_cmd->callback([&] {
        auto model = read_model(classify.index);
        if (classify.k) model.set_k(classify.k);
        const auto data =
            load_query_table(classify.input, model.index().dim(), classify.csv);
        const auto points = quantize_queries(model, data);

        const auto predictions = gbq::predict_batch(model, points);
        const bool have_truth =
            !data.label_name.empty() &&
            std::any_of(data.records.begin(), data.records.end(),
                        [](const gbq::RawRecord& r) { return !r.label.empty(); });
        std::size_t correct = 0;
        json rows = json::array();
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const std::string predicted = model.label_name(predictions[i]);
            json row{{"query", i}, {"predicted", predicted}};
            if (have_truth) {
                row["actual"] = data.records[i].label;
                correct += predicted == data.records[i].label;
            }
            rows.push_back(std::move(row));
        }

        Output out(classify.output);
        json summary{{"type", "classification"}, {"predictions", std::move(rows)}};
        if (have_truth && !predictions.empty())
            summary["accuracy"] =
                static_cast<double>(correct) / static_cast<double>(predictions.size());
        if (classify.format == "json") {
            out.stream() << summary.dump(2) << "\n";
        } else {
            json header{{"type", "classification"},
                        {"columns", have_truth
                                        ? json::array({"query", "predicted", "actual"})
                                        : json::array({"query", "predicted"})}};
            if (summary.contains("accuracy")) header["accuracy"] = summary["accuracy"];
            out.stream() << header.dump() << "\n";
            for (const auto& row : summary["predictions"]) {
                out.stream() << row["query"] << ','
                             << row["predicted"].get<std::string>();
                if (have_truth)
                    out.stream() << ',' << row["actual"].get<std::string>();
                out.stream() << "\n";
            }
        }
        if (have_truth && !predictions.empty())
            std::cerr << "accuracy " << summary["accuracy"].dump() << " over "
                      << predictions.size() << " rows\n";
    });

    // ---- bench ----
    struct {
        std::vector<std::size_t> sizes{256, 1024, 4096, 16384};
        std::size_t seeds = 5, queries = 50, k = 5, dim = 2, classes = 2;
        std::uint32_t max_neighbors = 4;
        int bits = 8, cmp_bits = 16;
        double separation = 8.0, spread = 1.0;
        std::string backend = "exact";
        std::uint64_t shots = 4096, seed = 1;
        bool full_layer = false;
        std::string output, format = "json";
    } bench;
    auto* bench_cmd = app.add_subcommand(
        "bench", "Scaling benchmark over a grid of ball counts");
    bench_cmd->add_option("--sizes", bench.sizes, "Ball counts (comma separated)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seeds", bench.seeds, "Seeds per size")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--queries", bench.queries, "Queries per cell")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--max-neighbors", bench.max_neighbors, "Degree cap m")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--k", bench.k, "Queue capacity")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--bits", bench.bits, "Feature bits t_a")
        ->check(CLI::Range(1, 16));
    bench_cmd->add_option("--dim", bench.dim, "Feature dimension")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--classes", bench.classes, "Blob classes")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--separation", bench.separation, "Blob separation")
        ->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--spread", bench.spread, "Blob sigma")
        ->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--backend", bench.backend, "Similarity backend")
        ->check(CLI::IsMember({"exact", "sampled"}));
    bench_cmd->add_option("--shots", bench.shots, "Shots per swap test (sampled)")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--cmp-bits", bench.cmp_bits, "Comparator bits q")
        ->check(CLI::Range(1, 52));
    bench_cmd->add_option("--seed", bench.seed, "Base seed")->envname("GBQ_SEED");
    bench_cmd->add_flag("--full-layer-candidates", bench.full_layer,
                        "Whole-layer candidate scope during insertion");
    bench_cmd->add_option("--output", bench.output, "Output path (default stdout)");
    bench_cmd->add_option("--format", bench.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    bench_cmd->callback([&] {
        gbq::ScalingConfig config;
        config.sizes = bench.sizes;
        config.seeds = bench.seeds;
        config.base_seed = bench.seed;
        config.queries = bench.queries;
        config.max_neighbors = bench.max_neighbors;
        config.k = bench.k;
        config.bits = bench.bits;
        config.dim = bench.dim;
        config.classes = bench.classes;
        config.separation = bench.separation;
        config.spread = bench.spread;
        config.backend = make_backend(bench.backend, bench.shots);
        config.cmp_bits = bench.cmp_bits;
        config.full_layer_candidates = bench.full_layer;

        const auto report = gbq::run_scaling(config);
        Output out(bench.output);
        if (bench.format == "json")
            gbq::write_report_json(report, out.stream());
        else
            gbq::write_report_csv(report, out.stream());
        std::cerr << "R2 vs log2 M: " << report.fit.r2_vs_log_m
                  << ", R2 vs M: " << report.fit.r2_vs_m << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const gbq::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

#include "gbq/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gbq/quantum.hpp"

namespace gbq {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_integer(const std::string& s, long long& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::size_t resolve_column(const ColumnRef& ref,
                           const std::vector<std::string>& columns,
                           std::size_t column_count, bool allow_past_end) {
    if (ref.name && ref.index)
        throw std::invalid_argument("column selected by both name and index");
    if (ref.name) {
        auto it = std::find(columns.begin(), columns.end(), *ref.name);
        if (it == columns.end())
            throw std::invalid_argument("unknown column '" + *ref.name + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }
    if (ref.index) {
        const std::size_t limit = allow_past_end ? column_count + 1 : column_count;
        if (*ref.index >= limit)
            throw std::invalid_argument("column index " +
                                        std::to_string(*ref.index) +
                                        " out of range");
        return *ref.index;
    }
    throw std::invalid_argument("empty column reference");
}

// Numeric labels sort by value, anything else lexicographically.
std::vector<std::string> sorted_labels(const std::set<std::string>& raw) {
    std::vector<std::string> labels(raw.begin(), raw.end());
    std::vector<long long> values(labels.size());
    bool all_numeric = true;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (!parse_integer(labels[i], values[i])) {
            all_numeric = false;
            break;
        }
    if (all_numeric) {
        std::vector<std::size_t> order(labels.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::string> out;
        out.reserve(labels.size());
        for (std::size_t i : order) out.push_back(labels[i]);
        return out;
    }
    return labels;  // already sorted by std::set
}

}  // namespace

Dataset load_table(std::istream& in, const CsvSpec& spec) {
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> columns;
    std::string header_label_name;
    bool have_columns = false;
    bool saw_json_header = false;

    // Peel off the JSON header or CSV header row.
    std::string first_data_line;
    std::size_t first_data_line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = trim(line);
        if (content.empty()) continue;
        if (content.front() == '{') {
            nlohmann::json header;
            try {
                header = nlohmann::json::parse(content);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(std::string("invalid JSON header: ") + e.what(),
                                 line_no);
            }
            if (!header.contains("columns") || !header["columns"].is_array())
                throw ParseError("JSON header lacks a columns array", line_no);
            for (const auto& c : header["columns"])
                columns.push_back(c.get<std::string>());
            if (header.contains("label"))
                header_label_name = header["label"].get<std::string>();
            have_columns = true;
            saw_json_header = true;
        } else {
            const std::vector<std::string> cells = split_line(content);
            bool all_numeric = true;
            for (const auto& c : cells) {
                double unused;
                if (!parse_double(c, unused)) {
                    all_numeric = false;
                    break;
                }
            }
            const bool is_header =
                spec.header == HeaderMode::Present ||
                (spec.header == HeaderMode::Auto && !all_numeric);
            if (is_header) {
                columns = cells;
                have_columns = true;
            } else {
                first_data_line = content;
                first_data_line_no = line_no;
            }
        }
        break;
    }

    // Column count comes from the header or the first data row.
    std::size_t column_count = columns.size();
    if (!have_columns && !first_data_line.empty())
        column_count = split_line(first_data_line).size();

    Dataset dataset;
    std::size_t label_col = column_count;  // one past the end: no label column
    bool has_label = column_count > 0;
    if (spec.label.name || spec.label.index) {
        label_col = resolve_column(spec.label, columns, column_count, true);
        has_label = label_col < column_count;
    } else if (!header_label_name.empty()) {
        ColumnRef by_name;
        by_name.name = header_label_name;
        label_col = resolve_column(by_name, columns, column_count, false);
    } else if (column_count > 0) {
        label_col = column_count - 1;
    }

    std::vector<std::size_t> feature_cols;
    if (spec.features.empty()) {
        for (std::size_t j = 0; j < column_count; ++j)
            if (!(has_label && j == label_col)) feature_cols.push_back(j);
    } else {
        for (const auto& ref : spec.features)
            feature_cols.push_back(resolve_column(ref, columns, column_count, false));
    }

    for (std::size_t j : feature_cols)
        dataset.feature_names.push_back(have_columns ? columns[j]
                                                     : "c" + std::to_string(j));
    dataset.label_name =
        has_label ? (have_columns ? columns[label_col] : "label") : "";

    auto consume_row = [&](const std::string& content, std::size_t row_line) {
        const std::vector<std::string> cells = split_line(content);
        if (column_count == 0) column_count = cells.size();
        if (cells.size() != column_count)
            throw ParseError("expected " + std::to_string(column_count) +
                                 " columns, got " + std::to_string(cells.size()),
                             row_line);
        RawRecord record;
        record.features.reserve(feature_cols.size());
        for (std::size_t j : feature_cols) {
            double value;
            if (!parse_double(cells[j], value)) {
                throw ParseError("column '" +
                                     (have_columns ? columns[j] : std::to_string(j)) +
                                     "' is not numeric",
                                 row_line);
            }
            record.features.push_back(value);
        }
        if (has_label) record.label = cells[label_col];
        dataset.records.push_back(std::move(record));
    };

    if (!first_data_line.empty()) consume_row(first_data_line, first_data_line_no);
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = trim(line);
        if (content.empty()) continue;
        consume_row(content, line_no);
    }
    (void)saw_json_header;
    return dataset;
}

Dataset load_csv(const std::string& path, const CsvSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_table(in, spec);
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
    nlohmann::json header;
    header["type"] = "dataset";
    nlohmann::json columns = nlohmann::json::array();
    for (const auto& name : dataset.feature_names) columns.push_back(name);
    if (!dataset.label_name.empty()) {
        columns.push_back(dataset.label_name);
        header["label"] = dataset.label_name;
    }
    header["columns"] = std::move(columns);
    out << header.dump() << "\n";
    for (const auto& record : dataset.records) {
        for (std::size_t j = 0; j < record.features.size(); ++j) {
            if (j) out << ',';
            out << format_double(record.features[j]);
        }
        if (!dataset.label_name.empty()) {
            if (!record.features.empty()) out << ',';
            out << record.label;
        }
        out << "\n";
    }
}

QuantizeResult quantize_dataset(const Dataset& dataset, int bits,
                                const std::optional<QuantizationBounds>& bounds) {
    std::set<std::string> raw_labels;
    for (const auto& record : dataset.records) raw_labels.insert(record.label);
    return quantize_dataset(dataset, bits, bounds, sorted_labels(raw_labels));
}

QuantizeResult quantize_dataset(const Dataset& dataset, int bits,
                                const std::optional<QuantizationBounds>& bounds,
                                const std::vector<std::string>& label_universe) {
    const std::uint32_t top = max_encodable(bits);
    const std::size_t dim = dataset.records.empty()
                                ? dataset.feature_names.size()
                                : dataset.records.front().features.size();

    QuantizeResult result;
    result.label_names = label_universe;
    if (bounds) {
        if (bounds->lo.size() != dim || bounds->hi.size() != dim)
            throw std::invalid_argument("bounds dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j)
            if (!(bounds->lo[j] < bounds->hi[j]))
                throw std::invalid_argument("degenerate bounds for feature " +
                                            std::to_string(j));
        result.bounds = *bounds;
    } else {
        result.bounds.lo.assign(dim, 0.0);
        result.bounds.hi.assign(dim, 0.0);
        bool first = true;
        for (const auto& record : dataset.records) {
            if (record.features.size() != dim)
                throw std::invalid_argument("dimension mismatch");
            for (std::size_t j = 0; j < dim; ++j) {
                const double v = record.features[j];
                if (first) {
                    result.bounds.lo[j] = v;
                    result.bounds.hi[j] = v;
                } else {
                    result.bounds.lo[j] = std::min(result.bounds.lo[j], v);
                    result.bounds.hi[j] = std::max(result.bounds.hi[j], v);
                }
            }
            first = false;
        }
    }

    result.points.reserve(dataset.records.size());
    for (const auto& record : dataset.records) {
        if (record.features.size() != dim)
            throw std::invalid_argument("dimension mismatch");
        LabeledPoint point;
        point.features.reserve(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            const double lo = result.bounds.lo[j];
            const double hi = result.bounds.hi[j];
            const double v = record.features[j];
            long long q = 0;
            if (hi > lo) {
                q = std::llround((v - lo) / (hi - lo) * static_cast<double>(top));
            }
            if (v < lo || v > hi) ++result.clamped;
            q = std::clamp<long long>(q, 0, top);
            point.features.push_back(static_cast<std::uint32_t>(q));
        }
        auto it = std::find(label_universe.begin(), label_universe.end(),
                            record.label);
        if (it == label_universe.end())
            throw std::invalid_argument("unknown label '" + record.label + "'");
        point.label = static_cast<int>(it - label_universe.begin());
        result.points.push_back(std::move(point));
    }
    return result;
}

Dataset make_blobs(std::size_t per_class, std::size_t classes, std::size_t dim,
                   double separation, double spread, std::uint64_t seed) {
    if (per_class == 0 || classes == 0 || dim == 0 || spread < 0.0 ||
        separation < 0.0)
        throw std::invalid_argument("invalid blob parameters");

    Dataset dataset;
    for (std::size_t j = 0; j < dim; ++j)
        dataset.feature_names.push_back("f" + std::to_string(j));
    dataset.label_name = "label";

    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, spread > 0.0 ? spread : 1.0);
    const double step = separation / std::sqrt(static_cast<double>(dim));
    for (std::size_t c = 0; c < classes; ++c) {
        const double base = static_cast<double>(c) * step;
        for (std::size_t i = 0; i < per_class; ++i) {
            RawRecord record;
            record.features.reserve(dim);
            for (std::size_t j = 0; j < dim; ++j) {
                const double n = spread > 0.0 ? noise(rng) : 0.0;
                record.features.push_back(base + n);
            }
            record.label = std::to_string(c);
            dataset.records.push_back(std::move(record));
        }
    }
    return dataset;
}

}  // namespace gbq

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gbq/classifier.hpp"
#include "gbq/types.hpp"

namespace gbq {

struct RawRecord {
    std::vector<double> features;
    std::string label;

    bool operator==(const RawRecord&) const = default;
};

struct Dataset {
    std::vector<std::string> feature_names;
    std::string label_name;
    std::vector<RawRecord> records;

    bool operator==(const Dataset&) const = default;
};

// Selects a column by header name or zero-based position (at most one set).
struct ColumnRef {
    std::optional<std::string> name;
    std::optional<std::size_t> index;
};

enum class HeaderMode { Auto, Present, Absent };

struct CsvSpec {
    HeaderMode header = HeaderMode::Auto;
    // Label column; defaults to the last column. Setting index to the column
    // count exactly (one past the end) means "no label column".
    ColumnRef label{};
    // Feature columns; defaults to every non-label column in file order.
    std::vector<ColumnRef> features{};
};

// Comma-separated UTF-8 text, decimal-point floats, optional header row.
// Files may start with a one-line JSON header ({"columns": [...], ...}) as
// written by the CLI, which takes the place of a CSV header row. Errors
// carry 1-based line numbers.
Dataset load_table(std::istream& in, const CsvSpec& spec = {});
Dataset load_csv(const std::string& path, const CsvSpec& spec = {});

// Writes the one-line JSON header followed by comma-separated records.
void write_dataset(std::ostream& out, const Dataset& dataset);

struct QuantizeResult {
    std::vector<LabeledPoint> points;
    QuantizationBounds bounds;
    std::vector<std::string> label_names;  // label id -> raw label
    std::size_t clamped = 0;               // out-of-bounds values clamped
};

// Maps features onto the integer grid [0, 2^bits - 1]:
// round((v - lo) / (hi - lo) * (2^bits - 1)), clamped. Auto bounds come from
// the data (constant features map to 0); explicit degenerate bounds are an
// error. Raw labels get ids by sorted order (numeric when all labels parse
// as integers).
QuantizeResult quantize_dataset(const Dataset& dataset, int bits,
                                const std::optional<QuantizationBounds>& bounds = {});

// Quantizes with a label universe fixed in advance (e.g. the training label
// set); unseen labels are an error.
QuantizeResult quantize_dataset(const Dataset& dataset, int bits,
                                const std::optional<QuantizationBounds>& bounds,
                                const std::vector<std::string>& label_universe);

// Gaussian blobs: `classes` clusters of `per_class` points in `dim`
// dimensions, cluster centers `separation` apart along the diagonal,
// noise sigma `spread`. Labels are "0", "1", ...
Dataset make_blobs(std::size_t per_class, std::size_t classes, std::size_t dim,
                   double separation, double spread, std::uint64_t seed);

}  // namespace gbq

#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace she {

/// Deterministic number rendering shared by every writer: snprintf %.12g,
/// independent of stream state and global locale.
std::string fmt_num(double v);

/// One named, unit-annotated table column.
struct Column {
    std::string name;
    std::string unit;
};

/// Rectangular table of string cells under unit-annotated headers. Cells
/// are stored pre-rendered so that CSV and JSON emit identical digits.
struct Table {
    std::vector<Column> columns;
    std::vector<std::vector<std::string>> rows;

    /// Appends a row of verbatim cells; arity must match the header.
    void row(std::vector<std::string> cells);
    /// Appends a row of numbers rendered through fmt_num.
    void num_row(const std::vector<double>& cells);
};

/// CSV with a "name [unit]" header row, comma separators, '.' decimal
/// marks, UTF-8, '\n' line ends. Cells containing commas, quotes or line
/// breaks are rejected (ConfigError) instead of quoted.
void write_csv(std::ostream& os, const Table& t);

/// JSON mirror of the CSV: {"columns": [{"name","unit"},...],
/// "rows": [{name: cell, ...}, ...]} with cells as the same rendered
/// strings, so both formats carry identical digits.
void write_json(std::ostream& os, const Table& t);

/// Ordered key-value rows, as produced by the report serializers.
using KvRows = std::vector<std::pair<std::string, std::string>>;

/// Two-column CSV "key,value" preserving row order.
void write_kv_csv(std::ostream& os, const KvRows& kv);

/// Single JSON object preserving row order, values as strings.
void write_kv_json(std::ostream& os, const KvRows& kv);

/// One polyline of a chart; x and y must have equal length. Non-finite
/// points split the line instead of being drawn.
struct Series {
    std::string label;
    std::vector<double> x, y;
};

/// Chart layout. Log axes drop nonpositive points of that coordinate.
struct ChartSpec {
    std::string title;
    std::string x_label, y_label;
    bool log_x = false;
    bool log_y = false;
    int width = 720;
    int height = 480;
};

/// Static SVG line chart: fixed viewBox, inline styling, axis ticks,
/// per-series colors and a legend. No timestamps, random ids or external
/// references, so equal input yields byte-identical output.
void write_svg_chart(std::ostream& os, const ChartSpec& spec,
                     const std::vector<Series>& series);

} // namespace she

#include "she/report.hpp"

#include "she/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>

namespace she {

namespace {

void check_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") != std::string::npos)
        throw ConfigError("report: cell would need CSV quoting: '" + s + "'");
}

std::string header_name(const Column& c) {
    return c.unit.empty() ? c.name : c.name + " [" + c.unit + "]";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += ch;
        }
    }
    return out;
}

std::string fmt_px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

struct Tick {
    double value; // in transformed (possibly log10) coordinates
    std::string label;
};

std::vector<Tick> linear_ticks(double lo, double hi) {
    const double raw = (hi - lo) / 4.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    const double step = (r < 1.5 ? 1.0 : r < 3.0 ? 2.0 : r < 7.0 ? 5.0 : 10.0) * mag;
    std::vector<Tick> out;
    double v = std::ceil(lo / step) * step;
    for (; v <= hi + 1e-9 * step; v += step) {
        const double t = std::abs(v) < 1e-12 * step ? 0.0 : v;
        out.push_back({t, fmt_tick(t)});
    }
    return out;
}

std::vector<Tick> log_ticks(double lo, double hi) {
    std::vector<Tick> out;
    const int k_lo = static_cast<int>(std::floor(lo)) - 1;
    const int k_hi = static_cast<int>(std::ceil(hi)) + 1;
    for (int k = k_lo; k <= k_hi; ++k)
        for (double m : {1.0, 2.0, 5.0}) {
            const double v = k + std::log10(m);
            if (v >= lo - 1e-9 && v <= hi + 1e-9)
                out.push_back({v, fmt_tick(m * std::pow(10.0, k))});
        }
    if (out.size() > 10) {
        std::vector<Tick> decades;
        for (const Tick& t : out)
            if (std::abs(t.value - std::round(t.value)) < 1e-9)
                decades.push_back(t);
        if (decades.size() >= 2) out = std::move(decades);
    }
    if (out.size() > 10) {
        std::vector<Tick> thin;
        const std::size_t stride = (out.size() + 9) / 10;
        for (std::size_t i = 0; i < out.size(); i += stride)
            thin.push_back(out[i]);
        out = std::move(thin);
    }
    if (out.size() < 2) return linear_ticks(lo, hi); // sub-decade span
    return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

} // namespace

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void Table::row(std::vector<std::string> cells) {
    if (cells.size() != columns.size())
        throw ConfigError("report: row arity does not match the header");
    rows.push_back(std::move(cells));
}

void Table::num_row(const std::vector<double>& cells) {
    std::vector<std::string> rendered;
    rendered.reserve(cells.size());
    for (double v : cells) rendered.push_back(fmt_num(v));
    row(std::move(rendered));
}

void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
        const std::string name = header_name(t.columns[j]);
        check_cell(name);
        os << (j ? "," : "") << name;
    }
    os << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            check_cell(r[j]);
            os << (j ? "," : "") << r[j];
        }
        os << "\n";
    }
}

void write_json(std::ostream& os, const Table& t) {
    nlohmann::ordered_json doc;
    doc["columns"] = nlohmann::ordered_json::array();
    for (const Column& c : t.columns)
        doc["columns"].push_back({{"name", c.name}, {"unit", c.unit}});
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
        nlohmann::ordered_json row;
        for (std::size_t j = 0; j < r.size(); ++j)
            row[t.columns[j].name] = r[j];
        doc["rows"].push_back(std::move(row));
    }
    os << doc.dump(2) << "\n";
}

void write_kv_csv(std::ostream& os, const KvRows& kv) {
    os << "key,value\n";
    for (const auto& [k, v] : kv) {
        check_cell(k);
        check_cell(v);
        os << k << "," << v << "\n";
    }
}

void write_kv_json(std::ostream& os, const KvRows& kv) {
    nlohmann::ordered_json doc;
    for (const auto& [k, v] : kv) doc[k] = v;
    os << doc.dump(2) << "\n";
}

void write_svg_chart(std::ostream& os, const ChartSpec& spec,
                     const std::vector<Series>& series) {
    struct Pt {
        double x, y;
        bool ok;
    };
    // transform to plot coordinates, dropping points a log axis cannot show
    std::vector<std::vector<Pt>> pts(series.size());
    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    for (std::size_t s = 0; s < series.size(); ++s) {
        const Series& sr = series[s];
        if (sr.x.size() != sr.y.size())
            throw ConfigError("chart: series '" + sr.label +
                              "' has mismatched x/y lengths");
        for (std::size_t i = 0; i < sr.x.size(); ++i) {
            double tx = sr.x[i], ty = sr.y[i];
            bool ok = std::isfinite(tx) && std::isfinite(ty);
            if (ok && spec.log_x) ok = tx > 0.0;
            if (ok && spec.log_y) ok = ty > 0.0;
            if (ok) {
                if (spec.log_x) tx = std::log10(tx);
                if (spec.log_y) ty = std::log10(ty);
                x_lo = std::min(x_lo, tx);
                x_hi = std::max(x_hi, tx);
                y_lo = std::min(y_lo, ty);
                y_hi = std::max(y_hi, ty);
            }
            pts[s].push_back({tx, ty, ok});
        }
    }
    if (x_lo > x_hi)
        throw ConfigError("chart: no drawable points");
    auto pad = [](double& lo, double& hi) {
        if (hi - lo < 1e-12 * std::max(std::abs(lo), 1.0) + 1e-300) {
            lo -= 0.5;
            hi += 0.5;
        } else {
            const double m = 0.05 * (hi - lo);
            lo -= m;
            hi += m;
        }
    };
    pad(x_lo, x_hi);
    pad(y_lo, y_hi);

    const double W = spec.width, H = spec.height;
    const double ml = 72, mr = 16, mt = 36, mb = 48;
    auto px = [&](double tx) {
        return ml + (tx - x_lo) / (x_hi - x_lo) * (W - ml - mr);
    };
    auto py = [&](double ty) {
        return H - mb - (ty - y_lo) / (y_hi - y_lo) * (H - mt - mb);
    };

    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 "
       << spec.width << " " << spec.height << "\" width=\"" << spec.width
       << "\" height=\"" << spec.height << "\">\n";
    os << "<rect width=\"" << spec.width << "\" height=\"" << spec.height
       << "\" fill=\"white\"/>\n";
    os << "<g font-family=\"monospace\" font-size=\"12\">\n";

    const std::vector<Tick> xt =
        spec.log_x ? log_ticks(x_lo, x_hi) : linear_ticks(x_lo, x_hi);
    const std::vector<Tick> yt =
        spec.log_y ? log_ticks(y_lo, y_hi) : linear_ticks(y_lo, y_hi);
    for (const Tick& t : xt) {
        const std::string x = fmt_px(px(t.value));
        os << "<line x1=\"" << x << "\" y1=\"" << fmt_px(mt) << "\" x2=\""
           << x << "\" y2=\"" << fmt_px(H - mb)
           << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << fmt_px(H - mb + 16)
           << "\" text-anchor=\"middle\">" << xml_escape(t.label)
           << "</text>\n";
    }
    for (const Tick& t : yt) {
        const std::string y = fmt_px(py(t.value));
        os << "<line x1=\"" << fmt_px(ml) << "\" y1=\"" << y << "\" x2=\""
           << fmt_px(W - mr) << "\" y2=\"" << y
           << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << fmt_px(ml - 6) << "\" y=\"" << fmt_px(py(t.value) + 4)
           << "\" text-anchor=\"end\">" << xml_escape(t.label) << "</text>\n";
    }
    os << "<rect x=\"" << fmt_px(ml) << "\" y=\"" << fmt_px(mt)
       << "\" width=\"" << fmt_px(W - ml - mr) << "\" height=\""
       << fmt_px(H - mt - mb)
       << "\" fill=\"none\" stroke=\"#333333\"/>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % kPaletteSize];
        std::string points;
        auto flush = [&]() {
            if (!points.empty()) {
                os << "<polyline fill=\"none\" stroke=\"" << color
                   << "\" stroke-width=\"1.5\" points=\"" << points
                   << "\"/>\n";
                points.clear();
            }
        };
        for (const Pt& p : pts[s]) {
            if (!p.ok) {
                flush(); // break the line at undrawable points
                continue;
            }
            if (!points.empty()) points += " ";
            points += fmt_px(px(p.x)) + "," + fmt_px(py(p.y));
        }
        flush();
    }

    // legend in the upper right corner of the plot area
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % kPaletteSize];
        const double ly = mt + 16 + 16 * static_cast<double>(s);
        os << "<line x1=\"" << fmt_px(W - mr - 150) << "\" y1=\""
           << fmt_px(ly - 4) << "\" x2=\"" << fmt_px(W - mr - 126)
           << "\" y2=\"" << fmt_px(ly - 4) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fmt_px(W - mr - 120) << "\" y=\"" << fmt_px(ly)
           << "\">" << xml_escape(series[s].label) << "</text>\n";
    }

    os << "<text x=\"" << fmt_px(W / 2) << "\" y=\"" << fmt_px(mt - 12)
       << "\" text-anchor=\"middle\" font-size=\"14\">"
       << xml_escape(spec.title) << "</text>\n";
    os << "<text x=\"" << fmt_px(W / 2) << "\" y=\"" << fmt_px(H - 10)
       << "\" text-anchor=\"middle\">" << xml_escape(spec.x_label)
       << "</text>\n";
    os << "<text x=\"14\" y=\"" << fmt_px(H / 2)
       << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << fmt_px(H / 2) << ")\">" << xml_escape(spec.y_label) << "</text>\n";
    os << "</g>\n</svg>\n";
}

} // namespace she

// Copyright 2026 The ShadowGPT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "common.hpp"

namespace shadowgpt::report {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 440;
constexpr double kMarginLeft = 70;
constexpr double kMarginRight = 150;
constexpr double kMarginTop = 40;
constexpr double kMarginBottom = 50;

const std::array<const char *, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '&':
                out += "&amp;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string tick_label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string svg_open() {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           fixed(kWidth, 0) + "\" height=\"" + fixed(kHeight, 0) + "\" viewBox=\"0 0 " + fixed(kWidth, 0) + " " +
           fixed(kHeight, 0) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
           "<rect x=\"0\" y=\"0\" width=\"" + fixed(kWidth, 0) + "\" height=\"" + fixed(kHeight, 0) +
           "\" fill=\"white\"/>\n";
}

/// Piecewise-linear approximation of a perceptual blue-green-yellow map.
std::string color_at(double t) {
    static const std::array<std::array<double, 3>, 5> anchors = {
        {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 4.0;
    int k = std::min(3, static_cast<int>(t));
    double f = t - k;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(anchors[k][0] + f * (anchors[k + 1][0] - anchors[k][0]))),
                  static_cast<int>(std::lround(anchors[k][1] + f * (anchors[k + 1][1] - anchors[k][1]))),
                  static_cast<int>(std::lround(anchors[k][2] + f * (anchors[k + 1][2] - anchors[k][2]))));
    return buf;
}

std::string obs_family(const std::string &id) {
    size_t us = id.find('_');
    return us == std::string::npos ? id : id.substr(0, us);
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_number(std::string_view text) {
    if (text == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (text == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParameterError("not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::string format_point(const std::vector<double> &g) {
    std::string out;
    for (size_t k = 0; k < g.size(); k++) {
        out += (k ? "," : "") + format_number(g[k]);
    }
    return out;
}

std::vector<double> parse_point(std::string_view text) {
    std::vector<double> out;
    for (const auto &part : split(text, ',')) {
        out.push_back(parse_number(part));
    }
    return out;
}

std::string provenance_line(const Provenance &p) {
    return "checkpoint_crc32=" + p.checkpoint_crc32 + " plan_crc32=" + p.plan_crc32 +
           " seed=" + std::to_string(p.seed);
}

std::string Table::to_tsv() const {
    std::string out = "# " + comment + "\n";
    for (size_t k = 0; k < columns.size(); k++) {
        out += (k ? "\t" : "") + columns[k];
    }
    out += "\n";
    for (const auto &row : rows) {
        for (size_t k = 0; k < row.size(); k++) {
            out += (k ? "\t" : "") + row[k];
        }
        out += "\n";
    }
    return out;
}

Table Table::parse_tsv(std::string_view text) {
    Table t;
    std::vector<std::string> lines = split(text, '\n');
    size_t k = 0;
    if (k < lines.size() && lines[k].starts_with("# ")) {
        t.comment = lines[k].substr(2);
        k++;
    }
    if (k >= lines.size()) {
        throw IoError("table has no header row");
    }
    if (lines[k].empty()) {
        throw IoError("table has an empty header row");
    }
    t.columns = split(lines[k++], '\t');
    for (; k < lines.size(); k++) {
        if (lines[k].empty()) {
            continue;
        }
        auto row = split(lines[k], '\t');
        if (row.size() != t.columns.size()) {
            throw IoError("table row " + std::to_string(k) + " has " + std::to_string(row.size()) +
                          " fields, expected " + std::to_string(t.columns.size()));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

size_t Table::column(std::string_view name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw IoError("table has no column '" + std::string(name) + "'");
    }
    return static_cast<size_t>(it - columns.begin());
}

Table predictions_table(const std::vector<shadow::EstimateReport> &reports, const Provenance &p) {
    Table t;
    t.comment = provenance_line(p);
    t.columns = {"observable", "point", "value", "mean", "std_error", "shadow_count", "placement_spread",
                 "group_values"};
    for (const auto &r : reports) {
        std::string groups;
        for (size_t k = 0; k < r.group_values.size(); k++) {
            groups += (k ? "," : "") + format_number(r.group_values[k]);
        }
        t.rows.push_back({r.observable, format_point(r.point), format_number(r.value), format_number(r.mean),
                          format_number(r.std_error), std::to_string(r.shadow_count),
                          format_number(r.placement_spread), groups});
    }
    return t;
}

Table evaluation_table(const std::vector<pipeline::EvaluationRow> &rows, const Provenance &p) {
    Table t;
    t.comment = provenance_line(p);
    t.columns = {"observable", "point", "predicted", "mean", "std_error", "exact", "abs_error", "rel_error",
                 "shadow_count"};
    for (const auto &r : rows) {
        t.rows.push_back({r.report.observable, format_point(r.report.point), format_number(r.report.value),
                          format_number(r.report.mean), format_number(r.report.std_error), format_number(r.exact),
                          format_number(r.abs_error), format_number(r.rel_error),
                          std::to_string(r.report.shadow_count)});
    }
    return t;
}

Table oracle_table(const std::vector<pipeline::EvaluationRow> &rows, const Provenance &p) {
    Table t;
    t.comment = provenance_line(p);
    t.columns = {"observable", "point", "exact"};
    for (const auto &r : rows) {
        t.rows.push_back({r.report.observable, format_point(r.report.point), format_number(r.exact)});
    }
    return t;
}

Table duality_table(const std::vector<pipeline::DualityRow> &rows, const Provenance &p) {
    Table t;
    t.comment = provenance_line(p);
    t.columns = {"g",     "n",          "predicted_zz", "predicted_xstring_dual", "predicted_gap",
                 "exact_zz", "exact_xstring_dual", "exact_gap"};
    for (const auto &r : rows) {
        t.rows.push_back({format_number(r.g), std::to_string(r.n), format_number(r.predicted_zz),
                          format_number(r.predicted_xstring_dual), format_number(r.predicted_gap),
                          format_number(r.exact_zz), format_number(r.exact_xstring_dual),
                          format_number(r.exact_gap)});
    }
    return t;
}

Table triality_table(const std::vector<pipeline::TrialityRow> &rows, const Provenance &p) {
    Table t;
    t.comment = provenance_line(p);
    t.columns = {"point", "permuted", "energy", "permuted_energy", "gap"};
    for (const auto &r : rows) {
        t.rows.push_back({format_point(r.point), format_point(r.permuted), format_number(r.energy),
                          format_number(r.permuted_energy), format_number(r.gap)});
    }
    return t;
}

std::string line_plot_svg(std::string_view title, std::string_view x_label, std::string_view y_label,
                          const std::vector<Series> &series, const std::vector<double> &vlines) {
    for (const auto &s : series) {
        if (s.x.size() != s.y.size() || (!s.err.empty() && s.err.size() != s.x.size())) {
            throw ParameterError("series '" + s.name + "' has mismatched x, y and error lengths");
        }
    }
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto &s : series) {
        for (size_t k = 0; k < s.x.size(); k++) {
            double e = s.err.empty() || !std::isfinite(s.err[k]) ? 0.0 : s.err[k];
            if (!std::isfinite(s.y[k])) {
                continue;
            }
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, s.y[k] - e);
            y1 = std::max(y1, s.y[k] + e);
        }
    }
    if (!std::isfinite(x0)) {
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    }
    if (x1 - x0 < 1e-12) {
        x0 -= 0.5, x1 += 0.5;
    }
    if (y1 - y0 < 1e-12) {
        y0 -= 0.5, y1 += 0.5;
    }
    double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    const double pw = kWidth - kMarginLeft - kMarginRight;
    const double ph = kHeight - kMarginTop - kMarginBottom;
    auto sx = [&](double x) { return kMarginLeft + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return kMarginTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o << svg_open();
    o << "<text x=\"" << fixed(kWidth / 2 - kMarginRight / 2, 1) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
    for (double v : vlines) {
        if (v < x0 || v > x1) {
            continue;
        }
        o << "<line class=\"training\" x1=\"" << fixed(sx(v)) << "\" y1=\"" << fixed(kMarginTop) << "\" x2=\""
          << fixed(sx(v)) << "\" y2=\"" << fixed(kMarginTop + ph) << "\" stroke=\"#bbbbbb\" stroke-width=\"1\"/>\n";
    }
    o << "<rect x=\"" << fixed(kMarginLeft) << "\" y=\"" << fixed(kMarginTop) << "\" width=\"" << fixed(pw)
      << "\" height=\"" << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; k++) {
        double xv = x0 + (x1 - x0) * k / 4.0;
        double yv = y0 + (y1 - y0) * k / 4.0;
        o << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << fixed(kMarginTop + ph + 16)
          << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
        o << "<text x=\"" << fixed(kMarginLeft - 6) << "\" y=\"" << fixed(sy(yv) + 4) << "\" text-anchor=\"end\">"
          << tick_label(yv) << "</text>\n";
    }
    o << "<text x=\"" << fixed(kMarginLeft + pw / 2) << "\" y=\"" << fixed(kHeight - 12)
      << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << fixed(kMarginTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fixed(kMarginTop + ph / 2) << ")\">" << xml_escape(y_label) << "</text>\n";

    for (size_t si = 0; si < series.size(); si++) {
        const Series &s = series[si];
        const char *color = kPalette[si % kPalette.size()];
        o << "<g class=\"series\" data-name=\"" << xml_escape(s.name) << "\">\n";
        std::string path;
        for (size_t k = 0; k < s.x.size(); k++) {
            if (!std::isfinite(s.y[k])) {
                continue;
            }
            path += (path.empty() ? "M" : " L") + fixed(sx(s.x[k])) + " " + fixed(sy(s.y[k]));
        }
        if (!path.empty()) {
            o << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
              << (s.dashed ? " stroke-dasharray=\"5 3\"" : "") << (s.markers ? " stroke-opacity=\"0.5\"" : "")
              << "/>\n";
        }
        for (size_t k = 0; k < s.x.size(); k++) {
            if (!std::isfinite(s.y[k])) {
                continue;
            }
            if (!s.err.empty() && std::isfinite(s.err[k]) && s.err[k] > 0) {
                o << "<line x1=\"" << fixed(sx(s.x[k])) << "\" y1=\"" << fixed(sy(s.y[k] - s.err[k])) << "\" x2=\""
                  << fixed(sx(s.x[k])) << "\" y2=\"" << fixed(sy(s.y[k] + s.err[k])) << "\" stroke=\"" << color
                  << "\"/>\n";
            }
            if (s.markers) {
                o << "<circle cx=\"" << fixed(sx(s.x[k])) << "\" cy=\"" << fixed(sy(s.y[k]))
                  << "\" r=\"2.5\" fill=\"" << color << "\" data-x=\"" << format_number(s.x[k]) << "\" data-y=\""
                  << format_number(s.y[k]) << "\"/>\n";
            }
        }
        double ly = kMarginTop + 14 + 18 * si;
        o << "<line x1=\"" << fixed(kWidth - kMarginRight + 12) << "\" y1=\"" << fixed(ly - 4) << "\" x2=\""
          << fixed(kWidth - kMarginRight + 32) << "\" y2=\"" << fixed(ly - 4) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"5 3\"" : "") << "/>\n";
        o << "<text x=\"" << fixed(kWidth - kMarginRight + 38) << "\" y=\"" << fixed(ly) << "\">"
          << xml_escape(s.name) << "</text>\n";
        o << "</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string ternary_svg(std::string_view title, const std::vector<std::vector<double>> &points,
                        const std::vector<double> &values, const std::vector<std::vector<double>> &crosses) {
    if (points.size() != values.size()) {
        throw ParameterError("ternary map has " + std::to_string(points.size()) + " points but " +
                             std::to_string(values.size()) + " values");
    }
    for (const auto *set : {&points, &crosses}) {
        for (const auto &g : *set) {
            if (g.size() != 3) {
                throw ParameterError("ternary map points need three coordinates");
            }
        }
    }
    const double side = 400;
    const double h = side * std::sqrt(3.0) / 2.0;
    const double ox = 60;
    const double oy = 60 + h;
    // g1 at bottom left, g2 at bottom right, g3 at the top.
    auto px = [&](const std::vector<double> &g) { return ox + side * (g[1] + g[2] / 2.0); };
    auto py = [&](const std::vector<double> &g) { return oy - h * g[2]; };

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!std::isfinite(lo)) {
        lo = 0, hi = 1;
    }
    double span = hi - lo > 1e-12 ? hi - lo : 1.0;
    // Cell radius from the lattice spacing implied by the point count.
    double den = std::max(1.0, (std::sqrt(8.0 * points.size() + 1.0) - 3.0) / 2.0);
    double r = side / den / 2.0;

    std::ostringstream o;
    o << svg_open();
    o << "<text x=\"" << fixed(ox + side / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
    o << "<polygon points=\"" << fixed(ox) << "," << fixed(oy) << " " << fixed(ox + side) << "," << fixed(oy) << " "
      << fixed(ox + side / 2) << "," << fixed(oy - h) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (size_t k = 0; k < points.size(); k++) {
        o << "<circle cx=\"" << fixed(px(points[k])) << "\" cy=\"" << fixed(py(points[k])) << "\" r=\"" << fixed(r)
          << "\" fill=\"" << color_at((values[k] - lo) / span) << "\" data-point=\"" << format_point(points[k])
          << "\" data-value=\"" << format_number(values[k]) << "\"/>\n";
    }
    for (const auto &c : crosses) {
        double cx = px(c), cy = py(c), a = 5;
        o << "<path class=\"training\" d=\"M" << fixed(cx - a) << " " << fixed(cy - a) << " L" << fixed(cx + a) << " "
          << fixed(cy + a) << " M" << fixed(cx - a) << " " << fixed(cy + a) << " L" << fixed(cx + a) << " "
          << fixed(cy - a) << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    }
    o << "<text x=\"" << fixed(ox - 8) << "\" y=\"" << fixed(oy + 18) << "\" text-anchor=\"middle\">g1</text>\n";
    o << "<text x=\"" << fixed(ox + side + 8) << "\" y=\"" << fixed(oy + 18) << "\" text-anchor=\"middle\">g2</text>\n";
    o << "<text x=\"" << fixed(ox + side / 2) << "\" y=\"" << fixed(oy - h - 10)
      << "\" text-anchor=\"middle\">g3</text>\n";
    const double bx = ox + side + 60;
    for (int k = 0; k < 20; k++) {
        double t = 1.0 - k / 19.0;
        o << "<rect x=\"" << fixed(bx) << "\" y=\"" << fixed(oy - h + k * h / 20.0) << "\" width=\"18\" height=\""
          << fixed(h / 20.0 + 0.5) << "\" fill=\"" << color_at(t) << "\"/>\n";
    }
    o << "<text x=\"" << fixed(bx + 24) << "\" y=\"" << fixed(oy - h + 10) << "\">" << tick_label(hi) << "</text>\n";
    o << "<text x=\"" << fixed(bx + 24) << "\" y=\"" << fixed(oy) << "\">" << tick_label(lo) << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

std::vector<Figure> evaluation_figures(const pipeline::PredictionPlan &plan,
                                       const std::vector<pipeline::EvaluationRow> &rows,
                                       const std::vector<std::vector<double>> &training_points) {
    std::vector<Figure> figures;
    if (plan.family == qsim::Family::TFIM) {
        std::vector<double> vlines;
        for (const auto &p : training_points) {
            vlines.push_back(p[0]);
        }
        // Observable families in first-seen order, each with its members in plan order.
        std::vector<std::string> families;
        std::map<std::string, std::vector<std::string>> members;
        for (const auto &o : plan.observables) {
            std::string fam = obs_family(o.id());
            if (!members.count(fam)) {
                families.push_back(fam);
            }
            members[fam].push_back(o.id());
        }
        for (const auto &fam : families) {
            std::vector<Series> series;
            for (const auto &id : members[fam]) {
                Series pred{id + " predicted", {}, {}, {}, true, false};
                Series exact{id + " exact", {}, {}, {}, false, true};
                for (const auto &r : rows) {
                    if (r.report.observable != id) {
                        continue;
                    }
                    pred.x.push_back(r.report.point[0]);
                    pred.y.push_back(r.report.value);
                    pred.err.push_back(r.report.std_error);
                    exact.x.push_back(r.report.point[0]);
                    exact.y.push_back(r.exact);
                }
                series.push_back(std::move(pred));
                series.push_back(std::move(exact));
            }
            figures.push_back({fam + ".svg", line_plot_svg(fam, "g", fam, series, vlines)});
        }
    } else {
        for (const auto &o : plan.observables) {
            std::vector<std::vector<double>> pts;
            std::vector<double> pred, exact, err;
            for (const auto &r : rows) {
                if (r.report.observable != o.id()) {
                    continue;
                }
                pts.push_back(r.report.point);
                pred.push_back(r.report.value);
                exact.push_back(r.exact);
                err.push_back(r.abs_error);
            }
            figures.push_back({o.id() + "_predicted.svg", ternary_svg(o.id() + " predicted", pts, pred, training_points)});
            figures.push_back({o.id() + "_exact.svg", ternary_svg(o.id() + " exact", pts, exact, training_points)});
            figures.push_back(
                {o.id() + "_abs_error.svg", ternary_svg(o.id() + " absolute error", pts, err, training_points)});
        }
    }
    return figures;
}

}  // namespace shadowgpt::report

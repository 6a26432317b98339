#pragma once

// Static SVG figures. Output depends only on the arguments, byte for byte:
// every number goes through a fixed-precision formatter and nothing reads
// the clock, the locale or the environment.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "metrics.hpp"

namespace dsrank::svg {

namespace detail {

inline std::string num(double v, int decimals = 2) {
    if (v == 0.0)
        v = 0.0; // no "-0.00"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s == "-0" || s.rfind("-0.", 0) == 0) {
        bool zero = std::all_of(s.begin() + 1, s.end(), [](char c) { return c == '0' || c == '.'; });
        if (zero)
            s.erase(0, 1);
    }
    return s;
}

inline std::string escape(const std::string &text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Rgb {
    double r, g, b;
};

inline std::string hex(Rgb c) {
    auto byte = [](double x) { return static_cast<int>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)); };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", byte(c.r), byte(c.g), byte(c.b));
    return buf;
}

inline Rgb lerp_stops(const Rgb *stops, std::size_t count, double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double x = t * static_cast<double>(count - 1);
    const auto k = std::min(static_cast<std::size_t>(x), count - 2);
    const double f = x - static_cast<double>(k);
    const Rgb a = stops[k], b = stops[k + 1];
    return {a.r + (b.r - a.r) * f, a.g + (b.g - a.g) * f, a.b + (b.b - a.b) * f};
}

/// Sequential scale, dark blue through green to yellow.
inline Rgb sequential(double t) {
    static constexpr std::array<Rgb, 5> stops{{{0.267, 0.005, 0.329},
                                                {0.230, 0.322, 0.546},
                                                {0.128, 0.567, 0.551},
                                                {0.369, 0.789, 0.383},
                                                {0.993, 0.906, 0.144}}};
    return lerp_stops(stops.data(), stops.size(), t);
}

/// Diverging scale centred on zero, blue for negative and red for positive.
inline Rgb diverging(double t) {
    static constexpr std::array<Rgb, 3> stops{{{0.230, 0.299, 0.754}, {0.865, 0.865, 0.865}, {0.706, 0.016, 0.150}}};
    return lerp_stops(stops.data(), stops.size(), t);
}

struct Scale {
    double lo = 0.0;
    double hi = 1.0;
    bool signed_ = false;

    static Scale fit(double lo, double hi) {
        Scale s;
        if (lo < 0.0) {
            const double m = std::max(std::abs(lo), std::abs(hi));
            s.lo = -m;
            s.hi = m;
            s.signed_ = true;
        } else {
            s.lo = lo;
            s.hi = hi;
        }
        if (!(s.hi > s.lo))
            s.hi = s.lo + 1.0;
        return s;
    }
    double unit(double v) const { return (v - lo) / (hi - lo); }
    Rgb color(double v) const { return signed_ ? diverging(unit(v)) : sequential(unit(v)); }
};

inline void colorbar(std::ostream &out, const Scale &scale, double x, double y, double height, const std::string &label) {
    constexpr int steps = 32;
    const double h = height / steps;
    for (int k = 0; k < steps; ++k) {
        const double v = scale.lo + (scale.hi - scale.lo) * (k + 0.5) / steps;
        out << "<rect x=\"" << num(x) << "\" y=\"" << num(y + height - (k + 1) * h) << "\" width=\"12\" height=\""
            << num(h + 0.05) << "\" fill=\"" << hex(scale.color(v)) << "\"/>\n";
    }
    out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"12\" height=\"" << num(height)
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"0.5\"/>\n";
    out << "<text x=\"" << num(x + 16) << "\" y=\"" << num(y + 4) << "\">" << num(scale.hi, 3) << "</text>\n";
    out << "<text x=\"" << num(x + 16) << "\" y=\"" << num(y + height + 4) << "\">" << num(scale.lo, 3) << "</text>\n";
    out << "<text x=\"" << num(x + 6) << "\" y=\"" << num(y - 8) << "\" text-anchor=\"middle\">" << escape(label)
        << "</text>\n";
}

inline void header(std::ostream &out, double width, double height) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width, 0) << "\" height=\"" << num(height, 0)
        << "\" viewBox=\"0 0 " << num(width, 0) << ' ' << num(height, 0)
        << "\" font-family=\"sans-serif\" font-size=\"10\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

} // namespace detail

/// One heat map: rows are years, columns are psi values.
struct HeatmapPanel {
    std::string title;
    std::vector<std::string> rows;
    std::vector<double> columns;
    std::vector<std::vector<double>> values; ///< [row][column]
};

/**
 * Side-by-side heat maps sharing the axes, each with its own color bar.
 * Panels with negative values get a diverging scale centred on zero.
 */
inline void emit_heatmap(std::ostream &out, const std::vector<HeatmapPanel> &panels, const std::string &title = "") {
    using namespace detail;
    if (panels.empty())
        throw DataError("heatmap: no panels");
    for (const auto &p : panels) {
        if (p.values.empty() || p.columns.empty())
            throw DataError("heatmap: empty grid");
        if (p.values.size() != p.rows.size())
            throw DataError("heatmap: " + std::to_string(p.values.size()) + " rows of values but " +
                            std::to_string(p.rows.size()) + " row labels");
        for (const auto &row : p.values)
            if (row.size() != p.columns.size())
                throw DataError("heatmap: ragged grid");
        if (p.rows != panels.front().rows || p.columns != panels.front().columns)
            throw DataError("heatmap: panels disagree on the grid");
    }

    constexpr double margin_left = 56, margin_top = 40, plot_w = 300, plot_h = 220, gap = 110, margin_bottom = 46;
    const double width = margin_left + static_cast<double>(panels.size()) * (plot_w + gap);
    const double height = margin_top + plot_h + margin_bottom;
    header(out, width, height);
    if (!title.empty())
        out << "<text x=\"" << num(width / 2) << "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">"
            << escape(title) << "</text>\n";

    for (std::size_t k = 0; k < panels.size(); ++k) {
        const auto &p = panels[k];
        const double x0 = margin_left + static_cast<double>(k) * (plot_w + gap);
        const double y0 = margin_top;
        double lo = p.values[0][0], hi = lo;
        for (const auto &row : p.values)
            for (double v : row) {
                if (!std::isfinite(v))
                    throw DataError("heatmap: non-finite value");
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        const Scale scale = Scale::fit(lo, hi);
        const std::size_t nr = p.rows.size(), nc = p.columns.size();
        const double cw = plot_w / static_cast<double>(nc), ch = plot_h / static_cast<double>(nr);

        out << "<g class=\"panel\">\n";
        out << "<text x=\"" << num(x0 + plot_w / 2) << "\" y=\"" << num(y0 - 8) << "\" text-anchor=\"middle\">"
            << escape(p.title) << "</text>\n";
        for (std::size_t r = 0; r < nr; ++r)
            for (std::size_t c = 0; c < nc; ++c)
                out << "<rect class=\"cell\" x=\"" << num(x0 + static_cast<double>(c) * cw) << "\" y=\""
                    << num(y0 + static_cast<double>(r) * ch) << "\" width=\"" << num(cw + 0.05) << "\" height=\""
                    << num(ch + 0.05) << "\" fill=\"" << hex(scale.color(p.values[r][c])) << "\"/>\n";
        out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(plot_w) << "\" height=\""
            << num(plot_h) << "\" fill=\"none\" stroke=\"#333\"/>\n";

        // row labels, thinned to at most 12
        const std::size_t row_step = std::max<std::size_t>(1, (nr + 11) / 12);
        for (std::size_t r = 0; r < nr; r += row_step)
            out << "<text x=\"" << num(x0 - 4) << "\" y=\"" << num(y0 + (static_cast<double>(r) + 0.5) * ch + 3)
                << "\" text-anchor=\"end\">" << escape(p.rows[r]) << "</text>\n";
        // five column ticks
        const std::size_t ticks = std::min<std::size_t>(nc, 5);
        for (std::size_t t = 0; t < ticks; ++t) {
            const std::size_t c = ticks == 1 ? 0 : t * (nc - 1) / (ticks - 1);
            const double x = x0 + (static_cast<double>(c) + 0.5) * cw;
            out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y0 + plot_h) << "\" x2=\"" << num(x) << "\" y2=\""
                << num(y0 + plot_h + 4) << "\" stroke=\"#333\"/>\n";
            out << "<text x=\"" << num(x) << "\" y=\"" << num(y0 + plot_h + 15) << "\" text-anchor=\"middle\">"
                << num(p.columns[c]) << "</text>\n";
        }
        out << "<text x=\"" << num(x0 + plot_w / 2) << "\" y=\"" << num(y0 + plot_h + 32)
            << "\" text-anchor=\"middle\">psi</text>\n";
        colorbar(out, scale, x0 + plot_w + 14, y0 + 10, plot_h - 20, "DS");
        out << "</g>\n";
    }
    out << "</svg>\n";
}

/**
 * Heat map panels from a group results table: one panel per rho at the
 * given damping, highest rho first, plus the highest minus the lowest rho
 * when there are at least two.
 */
inline std::vector<HeatmapPanel> heatmap_panels(const std::vector<ResultRow> &rows, const std::string &damping) {
    std::map<double, std::map<int, std::map<double, double>>> grid; // rho -> year -> psi -> ds
    for (const auto &r : rows) {
        if (r.scenario != "group" || r.damping != damping)
            continue;
        grid[r.rho][r.year][csv::parse_number(r.key, "psi_or_bank")] = r.ds_mean;
    }
    if (grid.empty())
        throw DataError("heatmap: no group results for damping '" + damping + "'");

    std::vector<HeatmapPanel> panels;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
        HeatmapPanel p;
        p.title = "rho = " + format_double(it->first) + ", " + damping;
        for (const auto &[year, by_psi] : it->second) {
            p.rows.push_back(std::to_string(year));
            std::vector<double> psis, values;
            for (const auto &[psi, ds] : by_psi) {
                psis.push_back(psi);
                values.push_back(ds);
            }
            if (p.columns.empty())
                p.columns = psis;
            else if (psis != p.columns)
                throw DataError("heatmap: ragged grid (year " + std::to_string(year) + " has a different psi grid)");
            p.values.push_back(std::move(values));
        }
        panels.push_back(std::move(p));
    }
    if (panels.size() >= 2) {
        const auto &a = panels.front(), &b = panels.back();
        if (a.rows != b.rows || a.columns != b.columns)
            throw DataError("heatmap: ragged grid (rho panels cover different years or psi values)");
        HeatmapPanel d;
        d.title = "difference (" + a.title.substr(0, a.title.find(',')) + " minus " +
                  b.title.substr(0, b.title.find(',')) + ")";
        d.rows = a.rows;
        d.columns = a.columns;
        for (std::size_t r = 0; r < a.values.size(); ++r) {
            std::vector<double> row;
            for (std::size_t c = 0; c < a.columns.size(); ++c)
                row.push_back(a.values[r][c] - b.values[r][c]);
            d.values.push_back(std::move(row));
        }
        panels.push_back(std::move(d));
    }
    return panels;
}

/**
 * Impact against vulnerability, one circle per bank. Circle area is
 * proportional to the equity weight and the fill encodes extended leverage.
 */
inline void emit_scatter(std::ostream &out, const std::vector<BankRiskProfile> &profiles, const std::string &title = "") {
    using namespace detail;
    if (profiles.empty())
        throw DataError("scatter: no banks");
    double max_nu = 0.0, lev_lo = profiles[0].extended_leverage, lev_hi = lev_lo, x_hi = 1.0, y_hi = 1.0;
    for (const auto &p : profiles) {
        if (!std::isfinite(p.impact) || !std::isfinite(p.vulnerability) || !std::isfinite(p.weight) ||
            !std::isfinite(p.extended_leverage))
            throw DataError("scatter: non-finite value for bank " + p.bank_id);
        max_nu = std::max(max_nu, p.weight);
        lev_lo = std::min(lev_lo, p.extended_leverage);
        lev_hi = std::max(lev_hi, p.extended_leverage);
        x_hi = std::max(x_hi, p.impact);
        y_hi = std::max(y_hi, p.vulnerability);
    }
    const Scale scale = Scale::fit(std::min(0.0, lev_lo), lev_hi);

    constexpr double left = 60, top = 36, plot = 360, right = 90, bottom = 50, max_radius = 24;
    header(out, left + plot + right, top + plot + bottom);
    if (!title.empty())
        out << "<text x=\"" << num(left + plot / 2) << "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">"
            << escape(title) << "</text>\n";
    out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(plot) << "\" height=\""
        << num(plot) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double f = t / 4.0;
        const double x = left + f * plot, y = top + plot - f * plot;
        out << "<text x=\"" << num(x) << "\" y=\"" << num(top + plot + 15) << "\" text-anchor=\"middle\">"
            << num(f * x_hi) << "</text>\n";
        out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 3) << "\" text-anchor=\"end\">" << num(f * y_hi)
            << "</text>\n";
    }
    out << "<text x=\"" << num(left + plot / 2) << "\" y=\"" << num(top + plot + 34)
        << "\" text-anchor=\"middle\">impact</text>\n";
    out << "<text x=\"16\" y=\"" << num(top + plot / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << num(top + plot / 2) << ")\">vulnerability</text>\n";

    // largest banks first so small markers stay visible on top
    std::vector<std::size_t> order(profiles.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return profiles[a].weight > profiles[b].weight; });
    for (std::size_t k : order) {
        const auto &p = profiles[k];
        const double r = max_nu > 0.0 ? max_radius * std::sqrt(p.weight / max_nu) : 0.0;
        out << "<circle class=\"bank\" cx=\"" << num(left + p.impact / x_hi * plot, 3) << "\" cy=\""
            << num(top + plot - p.vulnerability / y_hi * plot, 3) << "\" r=\"" << num(r, 3) << "\" fill=\""
            << hex(scale.color(p.extended_leverage)) << "\" fill-opacity=\"0.75\" stroke=\"#222\" stroke-width=\"0.4\">"
            << "<title>" << escape(p.bank_id) << "</title></circle>\n";
    }
    colorbar(out, scale, left + plot + 24, top + 20, plot - 40, "ext. leverage");
    out << "</svg>\n";
}

} // namespace dsrank::svg

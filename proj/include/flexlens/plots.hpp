#pragma once

// Static plot output: SVG line/scatter charts plus the raw CSV data behind each chart.

#include "flexlens/format.hpp"
#include "flexlens/io.hpp"
#include "flexlens/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace flexlens {

namespace svg {

inline constexpr double kWidth = 900.0, kHeight = 320.0, kMargin = 50.0;

struct Range {
    double lo = 0.0, hi = 1.0;
    void widen() {
        if (hi <= lo) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
    double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

inline std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string open(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(title) << "</text>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 8 << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n"
      << "<text x=\"14\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << kHeight / 2
      << ")\">" << escape(ylabel) << "</text>\n"
      << "<rect x=\"" << kMargin << "\" y=\"" << kMargin / 2 << "\" width=\"" << kWidth - 2 * kMargin << "\" height=\""
      << kHeight - 1.5 * kMargin << "\" fill=\"none\" stroke=\"#999\"/>\n";
    return o.str();
}

inline std::string axis_labels(const Range& y) {
    std::ostringstream o;
    o << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin / 2 + 4 << "\" text-anchor=\"end\">" << fmt_fixed(y.hi, 2)
      << "</text>\n"
      << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin << "\" text-anchor=\"end\">" << fmt_fixed(y.lo, 2)
      << "</text>\n";
    return o.str();
}

inline double px(const Range& r, double v) { return r.map(v, kMargin, kWidth - kMargin); }
inline double py(const Range& r, double v) { return r.map(v, kHeight - kMargin, kMargin / 2); }

/// Polyline broken at nulls.
inline std::string series(const std::vector<std::optional<double>>& ys, const Range& y, const char* colour) {
    const Range x{0.0, static_cast<double>(std::max<std::size_t>(ys.size(), 2) - 1)};
    std::ostringstream o;
    std::string points;
    auto flush = [&] {
        if (!points.empty()) o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1\" points=\"" << points << "\"/>\n";
        points.clear();
    };
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (!ys[i]) {
            flush();
            continue;
        }
        points += coord(px(x, static_cast<double>(i))) + "," + coord(py(y, *ys[i])) + " ";
    }
    flush();
    return o.str();
}

inline Range range_of(const std::vector<std::optional<double>>& ys) {
    Range r{0.0, 0.0};
    bool any = false;
    for (const auto& v : ys) {
        if (!v) continue;
        r.lo = any ? std::min(r.lo, *v) : *v;
        r.hi = any ? std::max(r.hi, *v) : *v;
        any = true;
    }
    r.lo = std::min(r.lo, 0.0);
    r.widen();
    return r;
}

}  // namespace svg

/// timestamp,energy,lme,flagged per hour of the analysis frame.
inline std::string facility_plot_csv(const FacilityResult& f) {
    std::string out = "timestamp,energy,lme,flagged\n";
    for (std::size_t i = 0; i < f.frame.rows.size(); ++i) {
        const auto& r = f.frame.rows[i];
        out += format_timestamp(r.timestamp) + "," + fmt_num(r.energy) + "," + fmt_num(r.lme) + "," +
               (f.flags.flag[i] ? "true" : "false") + "\n";
    }
    return out;
}

inline std::string load_svg(const FacilityResult& f) {
    std::vector<std::optional<double>> e;
    for (const auto& r : f.frame.rows) e.push_back(r.energy);
    const auto y = svg::range_of(e);
    const svg::Range x{0.0, static_cast<double>(std::max<std::size_t>(e.size(), 2) - 1)};
    std::string o = svg::open(f.entry.facility_id + " load", "hour", "energy (MWh)") + svg::axis_labels(y);
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (!f.flags.flag[i]) continue;
        o += "<circle cx=\"" + svg::coord(svg::px(x, static_cast<double>(i))) + "\" cy=\"" +
             svg::coord(svg::py(y, *e[i])) + "\" r=\"1.5\" fill=\"#d62728\"/>\n";
    }
    o += svg::series(e, y, "#1f77b4");
    return o + "</svg>\n";
}

inline std::string lme_svg(const FacilityResult& f) {
    std::vector<std::optional<double>> l;
    for (const auto& r : f.frame.rows) l.push_back(r.lme);
    const auto y = svg::range_of(l);
    return svg::open(f.entry.facility_id + " LME", "hour", "LME (tCO2/MWh)") + svg::axis_labels(y) +
           svg::series(l, y, "#2ca02c") + "</svg>\n";
}

inline std::string scatter_csv(const std::vector<QuadrantAssignment>& q) {
    std::string out = "facility_id,uptime_pct,avoided,label,uptime_cut,avoided_cut\n";
    for (const auto& a : q)
        out += a.facility_id + "," + fmt_num(a.uptime) + "," + fmt_num(a.avoided) + "," + a.label() + "," +
               fmt_num(a.uptime_cut) + "," + fmt_num(a.avoided_cut) + "\n";
    return out;
}

inline std::string scatter_svg(const std::vector<QuadrantAssignment>& q) {
    svg::Range x{0.0, 100.0};
    svg::Range y{0.0, 0.0};
    for (const auto& a : q) {
        y.lo = std::min(y.lo, a.avoided);
        y.hi = std::max(y.hi, a.avoided);
    }
    y.widen();
    std::string o = svg::open("Uptime vs avoided emissions", "uptime (%)", "avoided (tCO2)") + svg::axis_labels(y);
    if (!q.empty()) {
        const double ux = svg::px(x, q.front().uptime_cut), ay = svg::py(y, q.front().avoided_cut);
        o += "<line x1=\"" + svg::coord(ux) + "\" y1=\"" + svg::coord(svg::kMargin / 2) + "\" x2=\"" + svg::coord(ux) +
             "\" y2=\"" + svg::coord(svg::kHeight - svg::kMargin) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
        o += "<line x1=\"" + svg::coord(svg::kMargin) + "\" y1=\"" + svg::coord(ay) + "\" x2=\"" +
             svg::coord(svg::kWidth - svg::kMargin) + "\" y2=\"" + svg::coord(ay) +
             "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    }
    for (const auto& a : q) {
        const auto cx = svg::coord(svg::px(x, a.uptime)), cy = svg::coord(svg::py(y, a.avoided));
        o += "<circle cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"4\" fill=\"#1f77b4\"><title>" + svg::escape(a.facility_id) +
             "</title></circle>\n";
        o += "<text x=\"" + cx + "\" y=\"" + cy + "\" dx=\"5\" dy=\"-5\" font-size=\"9\">" + svg::escape(a.facility_id) +
             "</text>\n";
    }
    return o + "</svg>\n";
}

inline void emit_plots(const FleetReport& report, const fs::path& out) {
    const auto dir = out / "plots";
    for (const auto& f : report.facilities) {
        write_file(dir / (f.entry.facility_id + "_load.csv"), facility_plot_csv(f));
        write_file(dir / (f.entry.facility_id + "_load.svg"), load_svg(f));
        write_file(dir / (f.entry.facility_id + "_lme.svg"), lme_svg(f));
    }
    if (!report.quadrants.empty()) {
        write_file(dir / "fleet_scatter.csv", scatter_csv(report.quadrants));
        write_file(dir / "fleet_scatter.svg", scatter_svg(report.quadrants));
    }
}

}  // namespace flexlens

#pragma once

// Human-readable report.md assembled from an analyze output directory. Display rounding lives
// here only; every figure is read back from the emitted CSV/JSON files.

#include "flexlens/format.hpp"
#include "flexlens/io.hpp"

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace flexlens {

namespace detail {

inline std::string cell(const json& v, int decimals) {
    if (v.is_null()) return "n/a";
    if (v.is_number()) return fmt_fixed(v.get<double>(), decimals);
    if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
    return v.is_string() ? v.get<std::string>() : v.dump();
}

inline void fit_table(std::ostringstream& md, const json& fit) {
    md << "| term | beta | SE | t | p |\n|---|---:|---:|---:|---:|\n";
    for (const auto& t : fit.at("terms"))
        md << "| " << t.at("name").get<std::string>() << " | " << cell(t.at("beta"), 4) << " | " << cell(t.at("se"), 4)
           << " | " << cell(t.at("t"), 3) << " | " << cell(t.at("p"), 4) << " |\n";
    md << "\nn = " << fit.at("n").get<std::size_t>() << ", R² = " << cell(fit.at("r2"), 4)
       << ", adjusted R² = " << cell(fit.at("adj_r2"), 4) << "\n\n";
}

}  // namespace detail

inline std::string render_report(const fs::path& out) {
    const auto summary = read_json(out / "summary.json");
    const auto metrics = parse_metrics_csv(read_file(out / "metrics.csv"));
    std::ostringstream md;
    const auto& cfg = summary.at("config");
    md << "# Fleet curtailment report\n\n"
       << "- window: " << cfg.at("window_span").get<std::string>() << " (" << cfg.at("window").get<std::string>() << ")\n"
       << "- threshold mode: " << cfg.at("threshold_mode").get<std::string>() << "\n"
       << "- quadrant mode: " << cfg.at("quadrant_mode").get<std::string>() << "\n"
       << "- facilities: " << metrics.size() << "\n\n";

    md << "## Facility metrics\n\n"
       << "| facility | uptime % | avoided (t) | induced (t) | ME (MWh) | NAE | ER | CM % | CR (h) | LMEV | r |\n"
       << "|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& m : metrics)
        md << "| " << m.facility_id << " | " << fmt_fixed(m.uptime_pct, 2) << " | " << fmt_fixed(m.avoided, 2) << " | "
           << fmt_fixed(m.induced, 2) << " | " << fmt_fixed(m.me, 2) << " | " << fmt_fixed(m.nae, 2) << " | "
           << fmt_fixed(m.er, 4) << " | " << fmt_fixed(m.cm, 1) << " | " << fmt_fixed(m.cr, 2) << " | "
           << fmt_fixed(m.lmev, 3) << " | " << fmt_fixed(m.pearson_r, 3) << " |\n";
    md << "\n";

    md << "## Case studies\n\n";
    for (const auto& f : summary.at("facilities")) {
        const auto id = f.at("facility_id").get<std::string>();
        const auto& m = f.at("metrics");
        md << "### " << id << "\n\n"
           << "- region " << f.at("region").get<std::string>() << ", timezone " << f.at("timezone").get<std::string>()
           << ", source resolution " << f.at("origin_resolution").get<std::string>() << "\n"
           << "- threshold " << detail::cell(f.at("threshold"), 2) << " (" << f.at("selection_mode").get<std::string>()
           << (f.at("threshold_fallback").get<bool>() ? ", fallback" : "") << ")\n"
           << "- " << f.at("flagged_hours").get<std::size_t>() << " of " << f.at("valid_hours").get<std::size_t>()
           << " valid hours flagged in " << f.at("events").get<std::size_t>() << " events\n"
           << "- baselines: " << f.at("baseline_fallback_days").get<std::size_t>()
           << " days fell back to the daily maximum, " << f.at("excluded_days").get<std::size_t>()
           << " days excluded\n"
           << "- data repairs: " << f.at("outliers_repaired").get<std::size_t>() << " outliers, "
           << f.at("capacity_nulled").get<std::size_t>() << " capacity exceedances, " << f.at("lme_gaps").get<std::size_t>()
           << " hours without LME\n"
           << "- uptime " << detail::cell(m.at("uptime_pct"), 2) << "%, avoided " << detail::cell(m.at("avoided"), 2)
           << " t, induced " << detail::cell(m.at("induced"), 2) << " t\n";
        const auto& r = m.at("pearson_r");
        if (r.is_null()) {
            md << "- energy/LME correlation undefined\n";
        } else {
            const double v = r.get<double>();
            md << "- energy/LME correlation r = " << fmt_fixed(v, 3) << " ("
               << (v < 0 ? "load tends to fall when marginal emissions rise" : "load tends to rise with marginal emissions")
               << ")\n";
        }
        const auto events_path = out / "facilities" / id / "events.csv";
        if (fs::exists(events_path)) {
            const auto rows = detail::read_csv_rows(read_file(events_path));
            if (rows.size() > 1) {
                md << "\n| start | end | hours | min energy |\n|---|---|---:|---:|\n";
                const std::size_t shown = std::min<std::size_t>(rows.size() - 1, 10);
                for (std::size_t i = 1; i <= shown; ++i)
                    md << "| " << rows[i][0] << " | " << rows[i][1] << " | " << rows[i][2] << " | "
                       << fmt_fixed(std::stod(rows[i][3]), 2) << " |\n";
                if (rows.size() - 1 > shown) md << "\n" << rows.size() - 1 - shown << " more events in events.csv\n";
            }
        }
        md << "\n";
    }

    md << "## Regression\n\n";
    if (fs::exists(out / "regression.json")) {
        const auto reg = read_json(out / "regression.json");
        if (!reg.at("baseline_fit").is_null()) {
            md << "### Baseline: avoided ~ uptime\n\n";
            detail::fit_table(md, reg.at("baseline_fit"));
        }
        if (!reg.at("stepwise").is_null()) {
            const auto& sw = reg.at("stepwise");
            md << "### Stepwise\n\n| step | action | variable | p | adjusted R² |\n|---:|---|---|---:|---:|\n";
            std::size_t k = 0;
            for (const auto& s : sw.at("trace"))
                md << "| " << ++k << " | " << s.at("action").get<std::string>() << " | " << s.at("variable").get<std::string>()
                   << " | " << detail::cell(s.at("p_value"), 4) << " | " << detail::cell(s.at("adj_r2_after"), 4) << " |\n";
            md << "\nFinal model:\n\n";
            detail::fit_table(md, sw.at("fit"));
        }
        for (const auto& n : reg.at("notices")) md << "- " << n.get<std::string>() << "\n";
        md << "\n";
    }

    md << "## Performance quadrants\n\n";
    if (fs::exists(out / "quadrants.csv")) {
        const auto rows = detail::read_csv_rows(read_file(out / "quadrants.csv"));
        std::map<std::string, std::vector<std::string>> groups;
        for (std::size_t i = 1; i < rows.size(); ++i) groups[rows[i][5]].push_back(rows[i][0]);
        if (rows.size() > 1)
            md << "Cuts (" << rows[1][8] << "): uptime " << fmt_fixed(std::stod(rows[1][6]), 2) << "%, avoided "
               << fmt_fixed(std::stod(rows[1][7]), 2) << " t\n\n";
        md << "| quadrant | count | facilities |\n|---|---:|---|\n";
        for (const auto& [label, ids] : groups) {
            md << "| " << label << " | " << ids.size() << " | ";
            for (std::size_t i = 0; i < ids.size(); ++i) md << (i ? ", " : "") << ids[i];
            md << " |\n";
        }
    } else {
        md << "Not computed (needs at least 2 facilities).\n";
    }
    return md.str();
}

inline void write_report(const fs::path& out) { write_file(out / "report.md", render_report(out)); }

}  // namespace flexlens

#pragma once

// Files in and out: fleet manifest, synth fleet config, run options and the CSV/JSON artifacts.

#include "flexlens/analysis.hpp"
#include "flexlens/detect.hpp"
#include "flexlens/error.hpp"
#include "flexlens/format.hpp"
#include "flexlens/ingest.hpp"
#include "flexlens/metrics.hpp"
#include "flexlens/synthgen.hpp"
#include "flexlens/time.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace flexlens {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw InputError("write failed for '" + path.string() + "'");
}

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw InputError("'" + path.string() + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Fleet manifest

struct FacilityEntry {
    std::string facility_id;
    fs::path energy_path;
    fs::path lme_path;
    std::string region;
    std::optional<double> capacity_mw;
    UtcOffset zone;
};

struct Manifest {
    std::vector<FacilityEntry> facilities;

    /// Relative paths resolve against `base_dir`.
    static Manifest from_json(const json& j, const fs::path& base_dir) {
        Manifest m;
        if (!j.is_object() || !j.contains("facilities") || !j["facilities"].is_array())
            throw InputError("manifest: expected an object with a 'facilities' array");
        for (const auto& f : j["facilities"]) {
            try {
                FacilityEntry e;
                e.facility_id = f.at("facility_id").get<std::string>();
                e.energy_path = base_dir / f.at("energy").get<std::string>();
                e.lme_path = base_dir / f.at("lme").get<std::string>();
                e.region = f.value("region", std::string{});
                if (f.contains("capacity_mw") && !f["capacity_mw"].is_null()) e.capacity_mw = f["capacity_mw"].get<double>();
                e.zone = UtcOffset::parse(f.value("timezone", std::string{"UTC"}));
                if (e.facility_id.empty()) throw InputError("empty facility_id");
                m.facilities.push_back(std::move(e));
            } catch (const json::exception& ex) {
                throw InputError(std::string("manifest entry: ") + ex.what());
            }
        }
        std::sort(m.facilities.begin(), m.facilities.end(),
                  [](const FacilityEntry& a, const FacilityEntry& b) { return a.facility_id < b.facility_id; });
        for (std::size_t i = 1; i < m.facilities.size(); ++i)
            if (m.facilities[i].facility_id == m.facilities[i - 1].facility_id)
                throw InputError("manifest: duplicate facility_id '" + m.facilities[i].facility_id + "'");
        return m;
    }

    static Manifest load(const fs::path& path) { return from_json(read_json(path), path.parent_path()); }
};

// ---------------------------------------------------------------------------
// Run options

/// `auto` or `YYYY-MM-DD..YYYY-MM-DD` (inclusive dates, UTC).
struct WindowSpec {
    bool automatic = true;
    HourSpan span;

    static WindowSpec parse(const std::string& text) {
        if (text.empty() || text == "auto") return {};
        const auto sep = text.find("..");
        if (sep == std::string::npos) throw InputError("window must be 'auto' or START..END");
        const auto begin = parse_timestamp(text.substr(0, sep));
        auto end = parse_timestamp(text.substr(sep + 2));
        if (text.size() - sep - 2 == 10) end += std::chrono::days(1);  // inclusive end date
        if (!(begin < end)) throw InputError("window start must precede its end");
        return {false, {floor_hour(begin), floor_hour(end)}};
    }

    std::string str() const {
        return automatic ? "auto" : format_timestamp(span.begin) + ".." + format_timestamp(span.end);
    }
};

struct ThresholdMode {
    enum class Kind { kneedle, kneedle_fleet, fixed };
    Kind kind = Kind::kneedle;
    double value = kFallbackThreshold;

    static ThresholdMode parse(const std::string& text) {
        if (text == "kneedle") return {};
        if (text == "kneedle-fleet" || text == "fleet") return {Kind::kneedle_fleet, kFallbackThreshold};
        if (text.rfind("fixed:", 0) == 0) {
            double v = 0.0;
            try {
                std::size_t used = 0;
                v = std::stod(text.substr(6), &used);
                if (used != text.size() - 6) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw InputError("bad fixed threshold '" + text + "'");
            }
            if (!(v > 0.0 && v <= 1.0)) throw InputError("fixed threshold must be in (0, 1]");
            return {Kind::fixed, v};
        }
        throw InputError("threshold mode must be kneedle, kneedle-fleet or fixed:<v>");
    }

    std::string str() const {
        switch (kind) {
            case Kind::kneedle: return "kneedle";
            case Kind::kneedle_fleet: return "kneedle-fleet";
            case Kind::fixed: return "fixed:" + fmt_num(value);
        }
        return "?";
    }
};

// ---------------------------------------------------------------------------
// Synthetic fleet config

inline synth::FleetSpec fleet_spec_from_json(const json& j) {
    using namespace synth;
    try {
        FleetSpec fleet;
        fleet.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("preset")) {
            const auto& p = j["preset"];
            fleet = random_fleet(p.value("count", std::size_t{21}), fleet.seed, p.value("noise_min", 0.0),
                                 p.value("noise_max", 0.02), parse_timestamp(j.value("start", std::string{"2023-07-01T00:00Z"})),
                                 j.value("hours", std::size_t{2208}));
        } else {
            fleet.start = parse_timestamp(j.value("start", std::string{"2023-07-01T00:00Z"}));
            fleet.hours = j.value("hours", std::size_t{2208});
        }
        const auto res = j.value("resolution", std::string{"hourly"});
        if (res == "hourly")
            fleet.resolution = Resolution::hourly;
        else if (res == "quarter-hourly")
            fleet.resolution = Resolution::quarter_hourly;
        else
            throw InputError("resolution must be hourly or quarter-hourly");

        for (const auto& g : j.value("grids", json::array())) {
            GridSpec s;
            s.region_id = g.at("region").get<std::string>();
            s.lme_mean = g.value("lme_mean", s.lme_mean);
            s.diurnal_amplitude = g.value("diurnal_amplitude", s.diurnal_amplitude);
            s.diurnal_peak_hour = g.value("diurnal_peak_hour", s.diurnal_peak_hour);
            s.regime_switch_probability = g.value("regime_switch_probability", s.regime_switch_probability);
            s.regime_step = g.value("regime_step", s.regime_step);
            s.negative_hour_probability = g.value("negative_hour_probability", s.negative_hour_probability);
            s.negative_magnitude = g.value("negative_magnitude", s.negative_magnitude);
            s.noise = g.value("noise", s.noise);
            s.seed = g.value("seed", seed_for(fleet.seed, s.region_id));
            s.validate();
            fleet.grids.push_back(s);
        }
        for (const auto& f : j.value("facilities", json::array())) {
            FacilitySpec s;
            s.facility_id = f.at("facility_id").get<std::string>();
            s.region = f.at("region").get<std::string>();
            s.zone = UtcOffset::parse(f.value("timezone", std::string{"UTC"}));
            s.base_load = f.value("base_load", s.base_load);
            s.curtail_depth = f.value("curtail_depth", s.curtail_depth);
            s.schedule = parse_schedule(f.value("schedule", std::string{"none"}));
            s.window_start_hour = f.value("window_start_hour", s.window_start_hour);
            s.window_end_hour = f.value("window_end_hour", s.window_end_hour);
            s.window_probability = f.value("window_probability", s.window_probability);
            s.schedule_jitter = f.value("schedule_jitter", s.schedule_jitter);
            s.lme_percentile = f.value("lme_percentile", s.lme_percentile);
            for (const auto& e : f.value("events", json::array()))
                s.events.push_back({e.at("start").get<std::int64_t>(), e.at("hours").get<std::int64_t>()});
            s.noise = f.value("noise", s.noise);
            s.ramp = f.value("ramp", s.ramp);
            s.diurnal_amplitude = f.value("diurnal_amplitude", s.diurnal_amplitude);
            s.diurnal_peak_hour = f.value("diurnal_peak_hour", s.diurnal_peak_hour);
            s.underclock_depth = f.value("underclock_depth", s.underclock_depth);
            s.underclock_hours = f.value("underclock_hours", s.underclock_hours);
            s.underclock_probability = f.value("underclock_probability", s.underclock_probability);
            s.seed = f.value("seed", seed_for(fleet.seed, s.facility_id));
            s.validate();
            fleet.facilities.push_back(s);
        }
        if (fleet.facilities.empty()) throw InputError("fleet config has no facilities");
        for (const auto& f : fleet.facilities) {
            const bool known = std::any_of(fleet.grids.begin(), fleet.grids.end(),
                                           [&](const GridSpec& g) { return g.region_id == f.region; });
            if (!known) throw InputError("facility '" + f.facility_id + "' references unknown region '" + f.region + "'");
        }
        return fleet;
    } catch (const json::exception& e) {
        throw InputError(std::string("fleet config: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Series CSV

inline std::string series_csv(Instant start, const std::vector<std::optional<double>>& values,
                              Resolution resolution = Resolution::hourly) {
    std::string out = "timestamp,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto t = start + hours(static_cast<long>(i));
        const auto cell = values[i] ? fmt_num(*values[i]) : std::string{};
        if (resolution == Resolution::hourly) {
            out += format_timestamp(t) + "," + cell + "\n";
        } else {
            for (int q = 0; q < 4; ++q) out += format_timestamp(t + minutes(15 * q)) + "," + cell + "\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics table

inline const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> cols{"facility_id", "uptime_pct", "cm",      "cr",      "me",       "nae",
                                               "er",          "lmev",       "avoided", "induced", "pearson_r"};
    return cols;
}

inline std::string metrics_csv(std::span<const FacilityMetrics> rows) {
    std::string out;
    for (std::size_t i = 0; i < metrics_columns().size(); ++i) out += (i ? "," : "") + metrics_columns()[i];
    out += "\n";
    for (const auto& m : rows) {
        out += m.facility_id + "," + fmt_num(m.uptime_pct) + "," + fmt_num(m.cm) + "," + fmt_num(m.cr) + "," +
               fmt_num(m.me) + "," + fmt_num(m.nae) + "," + fmt_num(m.er) + "," + fmt_num(m.lmev) + "," +
               fmt_num(m.avoided) + "," + fmt_num(m.induced) + "," + fmt_num(m.pearson_r) + "\n";
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const auto comma = line.find(',', pos);
        out.emplace_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline std::vector<std::vector<std::string>> read_csv_rows(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = trim(text.substr(0, nl));
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (!line.empty()) rows.push_back(split_csv_line(line));
    }
    return rows;
}

inline std::optional<double> cell_number(const std::string& cell) {
    if (cell == "null" || cell.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InputError("bad number '" + cell + "'");
    }
}

inline double required(const std::optional<double>& v, const std::string& what) {
    if (!v) throw InputError("missing value for " + what);
    return *v;
}

}  // namespace detail

inline std::vector<FacilityMetrics> parse_metrics_csv(std::string_view text) {
    const auto rows = detail::read_csv_rows(text);
    if (rows.empty() || rows.front() != metrics_columns()) throw InputError("metrics.csv: unexpected header");
    std::vector<FacilityMetrics> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& c = rows[r];
        if (c.size() != metrics_columns().size()) throw InputError("metrics.csv: row " + std::to_string(r + 1) + " has wrong width");
        FacilityMetrics m;
        m.facility_id = c[0];
        m.uptime_pct = detail::required(detail::cell_number(c[1]), "uptime_pct");
        m.cm = detail::cell_number(c[2]);
        m.cr = detail::cell_number(c[3]);
        m.me = detail::required(detail::cell_number(c[4]), "me");
        m.nae = detail::cell_number(c[5]);
        m.er = detail::cell_number(c[6]);
        m.lmev = detail::cell_number(c[7]);
        m.avoided = detail::required(detail::cell_number(c[8]), "avoided");
        m.induced = detail::required(detail::cell_number(c[9]), "induced");
        m.pearson_r = detail::cell_number(c[10]);
        out.push_back(m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-facility artifacts

inline std::string thresholds_csv(const ThresholdProfile& p, std::optional<double> dr_at_chosen = std::nullopt) {
    std::string out = "threshold,dr_percent,difference,chosen\n";
    bool on_grid = false;
    for (std::size_t i = 0; i < p.sweep_grid.size(); ++i) {
        const bool chosen = p.sweep_grid[i] == p.chosen_threshold;
        on_grid = on_grid || chosen;
        out += fmt_num(p.sweep_grid[i]) + "," + fmt_num(p.dr_percent_at[i]) + "," +
               (i < p.difference.size() ? fmt_num(p.difference[i]) : std::string{"null"}) + "," +
               (chosen ? "true" : "false") + "\n";
    }
    if (!on_grid) out += fmt_num(p.chosen_threshold) + "," + fmt_num(dr_at_chosen) + ",null,true\n";
    return out;
}

inline std::string events_csv(std::span<const CurtailmentEvent> events) {
    std::string out = "start,end,duration_hours,min_energy,mean_energy\n";
    for (const auto& e : events)
        out += format_timestamp(e.start) + "," + format_timestamp(e.end) + "," + fmt_num(e.duration_hours) + "," +
               fmt_num(e.min_energy) + "," + fmt_num(e.mean_energy) + "\n";
    return out;
}

template <class Baselines>
std::string emissions_csv(const FacilityFrame& frame, const DrFlags& flags, const Baselines& baselines,
                          const std::vector<double>& avoided_by_hour) {
    std::string out = "timestamp,e,lme,flagged,baseline,A_id\n";
    for (std::size_t i = 0; i < frame.rows.size(); ++i) {
        const auto& r = frame.rows[i];
        out += format_timestamp(r.timestamp) + "," + fmt_num(r.energy) + "," + fmt_num(r.lme) + "," +
               (flags.flag[i] ? "true" : "false") + "," + fmt_num(baselines.baseline[flags.day_of_row[i]]) + "," +
               fmt_num(avoided_by_hour[i]) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regression / quadrants

inline json to_json(const RegressionFit& f) {
    json terms = json::array();
    for (const auto& t : f.terms) terms.push_back({{"name", t.name}, {"beta", t.beta}, {"se", t.se}, {"t", t.t}, {"p", t.p}});
    return {{"response", f.response}, {"predictors", f.predictors()}, {"terms", terms}, {"r2", f.r2},
            {"adj_r2", f.adj_r2},     {"n", f.n},                     {"dof", f.dof},   {"rss", f.rss}};
}

inline RegressionFit fit_from_json(const json& j) {
    RegressionFit f;
    f.response = j.at("response").get<std::string>();
    for (const auto& t : j.at("terms")) {
        auto num = [&](const char* k) { return t.at(k).is_null() ? std::numeric_limits<double>::infinity() : t.at(k).get<double>(); };
        f.terms.push_back({t.at("name").get<std::string>(), num("beta"), num("se"), num("t"), num("p")});
    }
    f.r2 = j.at("r2").get<double>();
    f.adj_r2 = j.at("adj_r2").get<double>();
    f.n = j.at("n").get<std::size_t>();
    f.dof = j.at("dof").get<std::size_t>();
    f.rss = j.value("rss", 0.0);
    return f;
}

inline json to_json(const StepwiseResult& s) {
    json trace = json::array();
    for (const auto& step : s.trace) {
        json e{{"action", to_string(step.action)}, {"variable", step.variable}};
        e["p_value"] = step.p_value ? json(*step.p_value) : json(nullptr);
        e["adj_r2_after"] = step.adj_r2_after ? json(*step.adj_r2_after) : json(nullptr);
        if (!step.reason.empty()) e["reason"] = step.reason;
        trace.push_back(e);
    }
    return {{"fit", to_json(s.fit)}, {"trace", trace}};
}

inline std::string quadrants_csv(std::span<const QuadrantAssignment> q) {
    std::string out = "facility_id,uptime_pct,avoided,uptime_axis,avoided_axis,label,uptime_cut,avoided_cut,mode\n";
    for (const auto& a : q)
        out += a.facility_id + "," + fmt_num(a.uptime) + "," + fmt_num(a.avoided) + "," + (a.high_uptime ? "high" : "low") +
               "," + (a.high_avoided ? "high" : "low") + "," + a.label() + "," + fmt_num(a.uptime_cut) + "," +
               fmt_num(a.avoided_cut) + "," + to_string(a.mode) + "\n";
    return out;
}

}  // namespace flexlens

#pragma once

// CSV parsing, hourly resampling, null gap filling, outlier repair and energy/LME alignment.

#include "flexlens/error.hpp"
#include "flexlens/time.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flexlens {

enum class SeriesKind { energy, lme };
enum class Resolution { hourly, quarter_hourly };

inline const char* to_string(Resolution r) {
    return r == Resolution::hourly ? "hourly" : "quarter-hourly";
}

struct RawReading {
    Instant timestamp;
    std::optional<double> value;  ///< null when the source cell is empty
};

/// Half-open hour range [begin, end).
struct HourSpan {
    Instant begin;
    Instant end;

    std::size_t size() const {
        return end > begin ? static_cast<std::size_t>(hours_between(begin, end)) : 0;
    }
    bool empty() const { return size() == 0; }

    friend HourSpan intersect(const HourSpan& a, const HourSpan& b) {
        HourSpan s{std::max(a.begin, b.begin), std::min(a.end, b.end)};
        if (s.end < s.begin) s.end = s.begin;
        return s;
    }
    friend bool operator==(const HourSpan&, const HourSpan&) = default;
};

/// Hourly facility energy (MWh per hour slot). One slot per hour from `start`.
struct EnergySeries {
    std::string facility_id;
    Instant start{};
    std::vector<std::optional<double>> values;
    std::vector<bool> partial;  ///< hour averaged from fewer than four quarter-hours
    Resolution origin_resolution = Resolution::hourly;

    HourSpan span() const { return {start, start + hours(static_cast<long>(values.size()))}; }
};

/// Hourly locational marginal emission factors (tons CO2/MWh, may be negative).
struct LmeSeries {
    std::string region_id;
    Instant start{};
    std::vector<std::optional<double>> values;

    HourSpan span() const { return {start, start + hours(static_cast<long>(values.size()))}; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

inline std::optional<double> parse_cell(std::string_view cell, std::size_t line) {
    cell = trim(cell);
    if (cell.empty() || iequals(cell, "null") || iequals(cell, "nan") || iequals(cell, "na")) return std::nullopt;
    double v = 0.0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || p != cell.data() + cell.size() || !std::isfinite(v))
        throw InputError("line " + std::to_string(line) + ": bad value '" + std::string(cell) + "'");
    return v;
}

}  // namespace detail

/// Parses a `timestamp,value` CSV. Rows come back sorted by timestamp; duplicates are rejected.
inline std::vector<RawReading> parse_series(std::string_view bytes, SeriesKind kind, UtcOffset zone = {}) {
    if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);
    struct Row {
        RawReading reading;
        std::size_t line;
    };
    std::vector<Row> rows;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (!bytes.empty()) {
        const auto nl = bytes.find('\n');
        auto line = detail::trim(bytes.substr(0, nl));
        bytes.remove_prefix(nl == std::string_view::npos ? bytes.size() : nl + 1);
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
            throw InputError("line " + std::to_string(line_no) + ": expected two fields");
        auto ts = detail::trim(line.substr(0, comma));
        auto val = line.substr(comma + 1);
        if (!header_seen) {
            if (!detail::iequals(ts, "timestamp") || !detail::iequals(detail::trim(val), "value"))
                throw InputError("line " + std::to_string(line_no) + ": expected header 'timestamp,value'");
            header_seen = true;
            continue;
        }
        Instant t;
        try {
            t = parse_timestamp(ts, zone);
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(line_no) + ": " + e.what());
        }
        auto v = detail::parse_cell(val, line_no);
        if (kind == SeriesKind::energy && v && *v < 0.0)
            throw InputError("line " + std::to_string(line_no) + ": negative energy value");
        rows.push_back({{t, v}, line_no});
    }
    if (rows.empty()) throw InputError("no readings");
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.reading.timestamp < b.reading.timestamp; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].reading.timestamp == rows[i - 1].reading.timestamp)
            throw InputError("duplicate timestamp " + format_timestamp(rows[i].reading.timestamp) + " (lines " +
                             std::to_string(rows[i - 1].line) + " and " + std::to_string(rows[i].line) + ")");
    }
    std::vector<RawReading> out;
    out.reserve(rows.size());
    for (auto& r : rows) out.push_back(r.reading);
    return out;
}

namespace detail {

struct HourlyMeans {
    Instant start{};
    std::vector<std::optional<double>> values;
    std::vector<bool> partial;
    Resolution resolution = Resolution::hourly;
};

inline HourlyMeans hourly_means(const std::vector<RawReading>& readings) {
    HourlyMeans out;
    if (readings.empty()) return out;
    bool sub_hourly = false;
    for (const auto& r : readings) {
        const auto into_hour = r.timestamp - floor_hour(r.timestamp);
        if (into_hour % minutes(15) != seconds(0))
            throw InputError("reading at " + format_timestamp(r.timestamp) + " is not on the quarter-hour grid");
        if (into_hour != seconds(0)) sub_hourly = true;
    }
    out.resolution = sub_hourly ? Resolution::quarter_hourly : Resolution::hourly;
    out.start = floor_hour(readings.front().timestamp);
    const auto n = static_cast<std::size_t>(hours_between(out.start, floor_hour(readings.back().timestamp))) + 1;
    std::vector<double> sum(n, 0.0);
    std::vector<int> present(n, 0);
    for (const auto& r : readings) {
        const auto slot = static_cast<std::size_t>(hours_between(out.start, floor_hour(r.timestamp)));
        if (r.value) {
            sum[slot] += *r.value;
            ++present[slot];
        }
    }
    out.values.resize(n);
    out.partial.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (present[i] == 0) continue;
        out.values[i] = sum[i] / present[i];
        out.partial[i] = sub_hourly && present[i] < 4;
    }
    return out;
}

}  // namespace detail

/// Averages quarter-hour (or hourly) readings into hourly slots. Hours without readings are null;
/// hours with 1-3 present quarter-hours are averaged and flagged partial.
inline EnergySeries resample_to_hourly(const std::vector<RawReading>& readings, std::string facility_id = {}) {
    auto m = detail::hourly_means(readings);
    return {std::move(facility_id), m.start, std::move(m.values), std::move(m.partial), m.resolution};
}

inline LmeSeries resample_lme(const std::vector<RawReading>& readings, std::string region_id = {}) {
    auto m = detail::hourly_means(readings);
    return {std::move(region_id), m.start, std::move(m.values)};
}

/// Regrids onto exactly `span`: hours without a slot become null, nothing is interpolated.
template <class Series>
Series fill_gaps(const Series& series, const HourSpan& span) {
    Series out = series;
    out.start = span.begin;
    out.values.assign(span.size(), std::nullopt);
    if constexpr (requires { out.partial; }) out.partial.assign(span.size(), false);
    const auto offset = hours_between(span.begin, series.start);
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        const auto j = offset + static_cast<std::int64_t>(i);
        if (j < 0 || j >= static_cast<std::int64_t>(span.size())) continue;
        out.values[static_cast<std::size_t>(j)] = series.values[i];
        if constexpr (requires { out.partial; })
            out.partial[static_cast<std::size_t>(j)] = i < series.partial.size() && series.partial[i];
    }
    return out;
}

/// Nulls hourly values above the site's capacity (MW x 1 h). Returns how many were removed.
inline std::size_t apply_capacity(EnergySeries& series, double capacity_mw) {
    std::size_t removed = 0;
    for (auto& v : series.values) {
        if (v && *v > capacity_mw) {
            v.reset();
            ++removed;
        }
    }
    return removed;
}

struct OutlierRepair {
    EnergySeries series;
    std::vector<std::size_t> repaired;  ///< slot indices that were replaced
};

inline constexpr double kOutlierFactor = 1.5;

/// Replaces values above 1.5x the previous data day's (repaired) maximum with the nearest
/// value that is itself within that limit. Earlier neighbour wins ties. The first day with
/// data has no reference and is left alone. Days are facility-local.
inline OutlierRepair repair_outliers_report(const EnergySeries& series, UtcOffset zone = {}) {
    OutlierRepair out{series, {}};
    auto& vals = out.series.values;
    const auto n = static_cast<std::int64_t>(vals.size());
    std::optional<double> reference;
    std::int64_t i = 0;
    while (i < n) {
        const auto day = LocalCalendar::of(series.start + hours(i), zone).day_index;
        std::int64_t end = i;
        while (end < n && LocalCalendar::of(series.start + hours(end), zone).day_index == day) ++end;
        if (reference) {
            const double limit = kOutlierFactor * *reference;
            for (std::int64_t k = i; k < end; ++k) {
                if (!vals[k] || *vals[k] <= limit) continue;
                std::optional<double> replacement;
                for (std::int64_t dist = 1; dist < n && !replacement; ++dist) {
                    for (const auto j : {k - dist, k + dist}) {
                        if (j < 0 || j >= n || !vals[j] || *vals[j] > limit) continue;
                        replacement = vals[j];
                        break;
                    }
                }
                vals[k] = replacement;
                out.repaired.push_back(static_cast<std::size_t>(k));
            }
        }
        std::optional<double> day_max;
        for (std::int64_t k = i; k < end; ++k)
            if (vals[k]) day_max = std::max(day_max.value_or(*vals[k]), *vals[k]);
        if (day_max) reference = day_max;
        i = end;
    }
    return out;
}

inline EnergySeries repair_outliers(const EnergySeries& series, UtcOffset zone = {}) {
    return repair_outliers_report(series, zone).series;
}

struct FrameRow {
    Instant timestamp;
    std::optional<double> energy;  ///< MWh; null when missing or when the hour has no LME
    std::optional<double> lme;     ///< tons CO2/MWh
    bool partial = false;
    LocalCalendar calendar;

    bool valid() const { return energy.has_value(); }
};

/// Per-facility analysis table: energy and LME on identical hourly timestamps.
struct FacilityFrame {
    std::string facility_id;
    UtcOffset zone;
    std::vector<FrameRow> rows;
    std::size_t lme_gaps = 0;  ///< energy hours dropped for lack of an LME value

    HourSpan span() const {
        if (rows.empty()) return {};
        return {rows.front().timestamp, rows.back().timestamp + hours(1)};
    }
    std::size_t valid_hours() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const FrameRow& r) { return r.valid(); }));
    }
};

/// Recomputes every row's calendar columns from its timestamp.
inline void derive_calendar(FacilityFrame& frame) {
    for (auto& r : frame.rows) r.calendar = LocalCalendar::of(r.timestamp, frame.zone);
}

/// Merges energy and LME over their common hours.
inline FacilityFrame align(const EnergySeries& energy, const LmeSeries& lme, UtcOffset zone = {}) {
    const auto span = intersect(energy.span(), lme.span());
    if (span.empty())
        throw InputError("facility '" + energy.facility_id + "': energy and LME spans do not overlap");
    FacilityFrame frame{energy.facility_id, zone, {}, 0};
    frame.rows.reserve(span.size());
    const auto e_off = hours_between(energy.start, span.begin);
    const auto l_off = hours_between(lme.start, span.begin);
    for (std::size_t i = 0; i < span.size(); ++i) {
        FrameRow row;
        row.timestamp = span.begin + hours(static_cast<long>(i));
        row.energy = energy.values[static_cast<std::size_t>(e_off) + i];
        row.lme = lme.values[static_cast<std::size_t>(l_off) + i];
        const auto pi = static_cast<std::size_t>(e_off) + i;
        row.partial = pi < energy.partial.size() && energy.partial[pi];
        if (row.energy && !row.lme) {
            row.energy.reset();
            ++frame.lme_gaps;
        }
        frame.rows.push_back(row);
    }
    derive_calendar(frame);
    return frame;
}

}  // namespace flexlens

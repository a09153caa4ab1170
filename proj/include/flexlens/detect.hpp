#pragma once

// Curtailment detection: daily-max fraction flags, run-length events and the Kneedle
// threshold sweep that picks each facility's fraction.

#include "flexlens/error.hpp"
#include "flexlens/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flexlens {

/// One local calendar day of a frame, rows [first_row, end_row).
struct DayInfo {
    std::int64_t day_index = 0;
    std::size_t first_row = 0;
    std::size_t end_row = 0;
    std::optional<double> max_energy;  ///< null for a fully-null (excluded) day

    bool excluded() const { return !max_energy.has_value(); }
};

struct DrFlags {
    double threshold = 0.0;
    std::vector<bool> flag;    ///< energy below threshold x day max
    std::vector<bool> active;  ///< hour belongs to an extracted event
    std::vector<std::size_t> day_of_row;
    std::vector<DayInfo> days;
    std::size_t valid_hours = 0;
    std::size_t flagged_hours = 0;

    std::size_t excluded_days() const {
        return static_cast<std::size_t>(std::count_if(days.begin(), days.end(), [](const DayInfo& d) { return d.excluded(); }));
    }
};

struct CurtailmentEvent {
    Instant start;  ///< first flagged hour
    Instant end;    ///< end of the last flagged hour (exclusive)
    std::size_t first_row = 0;
    std::size_t last_row = 0;
    double duration_hours = 0.0;
    double min_energy = 0.0;
    double mean_energy = 0.0;
    std::int64_t start_seconds_of_day = 0;  ///< facility-local
};

inline std::vector<DayInfo> split_days(const FacilityFrame& frame, std::vector<std::size_t>* day_of_row = nullptr) {
    std::vector<DayInfo> days;
    if (day_of_row) day_of_row->assign(frame.rows.size(), 0);
    for (std::size_t i = 0; i < frame.rows.size(); ++i) {
        const auto& r = frame.rows[i];
        if (days.empty() || days.back().day_index != r.calendar.day_index)
            days.push_back({r.calendar.day_index, i, i, std::nullopt});
        auto& d = days.back();
        d.end_row = i + 1;
        if (r.energy) d.max_energy = std::max(d.max_energy.value_or(*r.energy), *r.energy);
        if (day_of_row) (*day_of_row)[i] = days.size() - 1;
    }
    return days;
}

/// Flags every valid hour with energy strictly below `threshold` x its day's maximum.
inline DrFlags flag_hours(const FacilityFrame& frame, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw InputError("threshold must be in (0, 1], got " + std::to_string(threshold));
    DrFlags f;
    f.threshold = threshold;
    f.days = split_days(frame, &f.day_of_row);
    f.flag.assign(frame.rows.size(), false);
    for (std::size_t i = 0; i < frame.rows.size(); ++i) {
        const auto& e = frame.rows[i].energy;
        if (!e) continue;
        ++f.valid_hours;
        const auto& day = f.days[f.day_of_row[i]];
        if (*e < threshold * *day.max_energy) {
            f.flag[i] = true;
            ++f.flagged_hours;
        }
    }
    // Null hours are never flagged, so every flagged hour sits inside some maximal run.
    f.active = f.flag;
    return f;
}

/// Maximal runs of consecutive flagged hours. Runs may cross midnight; null hours split them.
inline std::vector<CurtailmentEvent> extract_events(const FacilityFrame& frame, const DrFlags& flags) {
    if (flags.flag.size() != frame.rows.size()) throw InvariantError("flags do not match frame");
    std::vector<CurtailmentEvent> events;
    std::size_t i = 0;
    const auto n = frame.rows.size();
    while (i < n) {
        if (!flags.flag[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        double sum = 0.0, lo = *frame.rows[i].energy;
        while (j < n && flags.flag[j]) {
            sum += *frame.rows[j].energy;
            lo = std::min(lo, *frame.rows[j].energy);
            ++j;
        }
        CurtailmentEvent ev;
        ev.first_row = i;
        ev.last_row = j - 1;
        ev.start = frame.rows[i].timestamp;
        ev.end = frame.rows[j - 1].timestamp + hours(1);
        ev.duration_hours = static_cast<double>(j - i);
        ev.min_energy = lo;
        ev.mean_energy = sum / static_cast<double>(j - i);
        ev.start_seconds_of_day = frame.rows[i].calendar.seconds_since_midnight;
        events.push_back(ev);
        i = j;
    }
    return events;
}

/// Fraction of valid hours flagged at `threshold`.
inline double dr_percent(const FacilityFrame& frame, double threshold) {
    const auto f = flag_hours(frame, threshold);
    if (f.valid_hours == 0) throw InputError("facility '" + frame.facility_id + "' has no valid hours");
    return static_cast<double>(f.flagged_hours) / static_cast<double>(f.valid_hours);
}

enum class SelectionMode { kneedle, fixed };

inline const char* to_string(SelectionMode m) { return m == SelectionMode::kneedle ? "kneedle" : "fixed"; }

inline constexpr double kFallbackThreshold = 0.90;
inline constexpr double kKneedleSensitivity = 1.0;

/// 0.50, 0.51, ..., 1.00
inline std::vector<double> default_grid() {
    std::vector<double> g;
    for (int i = 50; i <= 100; ++i) g.push_back(i / 100.0);
    return g;
}

struct KneeResult {
    std::vector<double> difference;   ///< Kneedle difference curve, same length as x
    std::optional<std::size_t> index;  ///< knee grid index, null when rejected
    bool convex = true;
};

/// Kneedle on an increasing curve. Both axes are min-max normalized; the difference curve is
/// taken in the orientation that makes the curve concave. The maximum is a knee only if it is
/// interior and clears the sensitivity margin S x mean normalized x-spacing.
inline KneeResult kneedle(std::span<const double> x, std::span<const double> y,
                          double sensitivity = kKneedleSensitivity) {
    if (x.size() != y.size() || x.size() < 3) throw InputError("kneedle: need >= 3 paired points");
    KneeResult out;
    const auto n = x.size();
    out.difference.assign(n, 0.0);
    const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
    const double xr = x.back() - x.front();
    const double yr = *yhi - *ylo;
    if (!(xr > 0.0) || !(yr > 0.0)) return out;
    std::vector<double> xn(n), yn(n);
    double bulge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xn[i] = (x[i] - x.front()) / xr;
        yn[i] = (y[i] - *ylo) / yr;
        bulge += yn[i] - xn[i];
    }
    out.convex = bulge <= 0.0;
    for (std::size_t i = 0; i < n; ++i) out.difference[i] = out.convex ? xn[i] - yn[i] : yn[i] - xn[i];
    const auto best = static_cast<std::size_t>(
        std::max_element(out.difference.begin(), out.difference.end()) - out.difference.begin());
    const double margin = sensitivity * (xn.back() - xn.front()) / static_cast<double>(n - 1);
    if (best > 0 && best + 1 < n && out.difference[best] - margin > 0.0) out.index = best;
    return out;
}

struct ThresholdProfile {
    std::string facility_id;
    std::vector<double> sweep_grid;
    std::vector<double> dr_percent_at;
    std::vector<double> difference;
    double chosen_threshold = kFallbackThreshold;
    SelectionMode selection_mode = SelectionMode::kneedle;
    bool fallback = false;
    std::string warning;
};

inline void validate_grid(std::span<const double> grid) {
    if (grid.size() < 5) throw InputError("threshold grid needs at least 5 points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] <= 1.0)) throw InputError("threshold grid values must be in (0, 1]");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw InputError("threshold grid must be strictly increasing");
    }
    if (grid.front() > 0.5 || grid.back() < 1.0) throw InputError("threshold grid must span [0.5, 1.0]");
}

inline void choose_knee(ThresholdProfile& p) {
    const auto knee = kneedle(p.sweep_grid, p.dr_percent_at);
    p.difference = knee.difference;
    p.selection_mode = SelectionMode::kneedle;
    if (knee.index) {
        p.chosen_threshold = p.sweep_grid[*knee.index];
        p.fallback = false;
        p.warning.clear();
    } else {
        p.chosen_threshold = kFallbackThreshold;
        p.fallback = true;
        p.warning = "no knee in DR sensitivity curve; using default threshold 0.90";
    }
}

/// Sweeps the grid, records DR% at each point and picks the knee (or falls back to 0.90).
inline ThresholdProfile knee_threshold(const FacilityFrame& frame, std::span<const double> grid) {
    validate_grid(grid);
    ThresholdProfile p;
    p.facility_id = frame.facility_id;
    p.sweep_grid.assign(grid.begin(), grid.end());
    for (double t : grid) p.dr_percent_at.push_back(dr_percent(frame, t));
    choose_knee(p);
    return p;
}

/// Fixed-threshold profile; the sweep is still recorded for the thresholds output.
inline ThresholdProfile fixed_threshold(const FacilityFrame& frame, std::span<const double> grid, double value) {
    if (!(value > 0.0 && value <= 1.0)) throw InputError("fixed threshold must be in (0, 1]");
    auto p = knee_threshold(frame, grid);
    p.chosen_threshold = value;
    p.selection_mode = SelectionMode::fixed;
    p.fallback = false;
    p.warning.clear();
    return p;
}

/// Single fleet knee over the mean DR% curve. Every profile must share one grid.
inline ThresholdProfile fleet_knee_threshold(std::span<const ThresholdProfile> profiles) {
    if (profiles.empty()) throw InputError("fleet knee needs at least one facility");
    ThresholdProfile fleet;
    fleet.facility_id = "fleet";
    fleet.sweep_grid = profiles.front().sweep_grid;
    fleet.dr_percent_at.assign(fleet.sweep_grid.size(), 0.0);
    for (const auto& p : profiles) {
        if (p.sweep_grid != fleet.sweep_grid) throw InputError("fleet knee: facilities use different grids");
        for (std::size_t i = 0; i < p.dr_percent_at.size(); ++i) fleet.dr_percent_at[i] += p.dr_percent_at[i];
    }
    for (auto& v : fleet.dr_percent_at) v /= static_cast<double>(profiles.size());
    choose_knee(fleet);
    return fleet;
}

}  // namespace flexlens

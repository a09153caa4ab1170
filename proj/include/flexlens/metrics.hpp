#pragma once

// Per-facility metric vector: uptime, curtailment magnitude/regularity, maximum energy,
// normalized avoided emissions, emissions ratio, LME variability and energy-LME correlation.

#include "flexlens/detect.hpp"
#include "flexlens/emissions.hpp"
#include "flexlens/ingest.hpp"
#include "flexlens/stats.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flexlens {

/// Undefined entries are null, never zero.
struct FacilityMetrics {
    std::string facility_id;
    double uptime_pct = 0.0;           ///< % of valid hours not flagged
    std::optional<double> cm;          ///< curtailment magnitude, %
    std::optional<double> cr;          ///< curtailment regularity, hours
    double me = 0.0;                   ///< maximum hourly energy, MWh
    std::optional<double> nae;         ///< tons CO2/MWh
    std::optional<double> er;          ///< avoided / induced
    std::optional<double> lmev;        ///< tons CO2/MWh
    double avoided = 0.0;              ///< tons CO2
    double induced = 0.0;              ///< tons CO2
    std::optional<double> pearson_r;
};

inline double uptime_pct(const DrFlags& flags) {
    if (flags.valid_hours == 0) throw InputError("uptime: no valid hours");
    return 100.0 * static_cast<double>(flags.valid_hours - flags.flagged_hours) /
           static_cast<double>(flags.valid_hours);
}

/// Number of hours in the "lowest quartile" subset: ceil(n / 4), at least 1.
inline std::size_t lowest_quartile_count(std::size_t n) { return std::max<std::size_t>(1, (n + 3) / 4); }

/// 100 x (1 - mean of the lowest quarter of flagged energies / mean unflagged energy).
inline std::optional<double> curtailment_magnitude(const FacilityFrame& frame, const DrFlags& flags) {
    std::vector<double> flagged;
    double unflagged_sum = 0.0;
    std::size_t unflagged = 0;
    for (std::size_t i = 0; i < frame.rows.size(); ++i) {
        const auto& e = frame.rows[i].energy;
        if (!e) continue;
        if (flags.flag[i]) {
            flagged.push_back(*e);
        } else {
            unflagged_sum += *e;
            ++unflagged;
        }
    }
    if (flagged.empty() || unflagged == 0) return std::nullopt;
    const double unflagged_mean = unflagged_sum / static_cast<double>(unflagged);
    if (unflagged_mean == 0.0) return std::nullopt;
    const auto k = lowest_quartile_count(flagged.size());
    std::partial_sort(flagged.begin(), flagged.begin() + static_cast<std::ptrdiff_t>(k), flagged.end());
    double low = 0.0;
    for (std::size_t i = 0; i < k; ++i) low += flagged[i];
    return 100.0 * (1.0 - (low / static_cast<double>(k)) / unflagged_mean);
}

/// Sample standard deviation of event start times (seconds after local midnight) in hours.
inline std::optional<double> curtailment_regularity(std::span<const CurtailmentEvent> events) {
    if (events.size() < 2) return std::nullopt;
    std::vector<double> starts;
    starts.reserve(events.size());
    for (const auto& e : events) starts.push_back(static_cast<double>(e.start_seconds_of_day));
    return *stats::sample_sd(starts) / 3600.0;
}

inline double max_energy(std::span<const std::optional<double>> values) {
    std::optional<double> best;
    for (const auto& v : values)
        if (v) best = std::max(best.value_or(*v), *v);
    if (!best) throw InputError("max_energy: series has no values");
    return *best;
}

inline double max_energy(const FacilityFrame& frame) {
    std::vector<std::optional<double>> v;
    v.reserve(frame.rows.size());
    for (const auto& r : frame.rows) v.push_back(r.energy);
    return max_energy(v);
}

inline double normalized_avoided(double avoided, double me) {
    if (!(me > 0.0)) throw InputError("normalized_avoided: maximum energy must be positive");
    return avoided / me;
}

inline std::optional<double> emissions_ratio(double avoided, double induced) {
    if (induced == 0.0) return std::nullopt;
    return avoided / induced;
}

inline std::optional<double> lme_variability(std::span<const double> lme) { return stats::sample_sd(lme); }

inline std::optional<double> lme_variability(const FacilityFrame& frame) {
    std::vector<double> v;
    for (const auto& r : frame.rows)
        if (r.lme) v.push_back(*r.lme);
    return lme_variability(v);
}

inline std::optional<double> pearson_r(std::span<const double> energy, std::span<const double> lme) {
    return stats::pearson(energy, lme);
}

inline std::optional<double> pearson_r(const FacilityFrame& frame) {
    std::vector<double> e, l;
    for (const auto& r : frame.rows) {
        if (!r.energy || !r.lme) continue;
        e.push_back(*r.energy);
        l.push_back(*r.lme);
    }
    return pearson_r(e, l);
}

inline FacilityMetrics compute_metrics(const FacilityFrame& frame, const DrFlags& flags,
                                       std::span<const CurtailmentEvent> events, const EmissionTotals& totals) {
    FacilityMetrics m;
    m.facility_id = frame.facility_id;
    m.uptime_pct = uptime_pct(flags);
    m.cm = curtailment_magnitude(frame, flags);
    m.cr = curtailment_regularity(events);
    m.me = max_energy(frame);
    m.avoided = totals.avoided;
    m.induced = totals.induced;
    if (m.me > 0.0) m.nae = normalized_avoided(m.avoided, m.me);
    m.er = emissions_ratio(m.avoided, m.induced);
    m.lmev = lme_variability(frame);
    m.pearson_r = pearson_r(frame);
    return m;
}

}  // namespace flexlens

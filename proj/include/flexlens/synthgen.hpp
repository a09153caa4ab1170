#pragma once

// Synthetic LME grids and facility load profiles with recorded curtailment ground truth.

#include "flexlens/error.hpp"
#include "flexlens/ingest.hpp"
#include "flexlens/stats.hpp"
#include "flexlens/time.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace flexlens::synth {

enum class ScheduleKind { none, daily, lme_threshold, explicit_events };

inline const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::none: return "none";
        case ScheduleKind::daily: return "daily";
        case ScheduleKind::lme_threshold: return "lme_threshold";
        case ScheduleKind::explicit_events: return "explicit";
    }
    return "?";
}

inline ScheduleKind parse_schedule(const std::string& s) {
    if (s == "none") return ScheduleKind::none;
    if (s == "daily") return ScheduleKind::daily;
    if (s == "lme_threshold" || s == "price") return ScheduleKind::lme_threshold;
    if (s == "explicit") return ScheduleKind::explicit_events;
    throw InputError("unknown schedule kind '" + s + "'");
}

/// Curtailment interval as hour offsets from the span start, [start, start + hours).
struct ScheduledEvent {
    std::int64_t start = 0;
    std::int64_t hours = 0;
};

struct FacilitySpec {
    std::string facility_id;
    std::string region;
    UtcOffset zone;
    double base_load = 100.0;      ///< MWh per hour at full power
    double curtail_depth = 0.0;    ///< fraction of base load shed while curtailed
    ScheduleKind schedule = ScheduleKind::none;
    int window_start_hour = 14;    ///< local clock, daily schedule
    int window_end_hour = 21;      ///< exclusive; <= start wraps past midnight
    double window_probability = 1.0;
    double schedule_jitter = 0.0;  ///< hours, sigma of the window start shift
    double lme_percentile = 0.9;   ///< lme_threshold schedule: curtail above this quantile
    std::vector<ScheduledEvent> events;
    double noise = 0.0;            ///< relative sigma of multiplicative Gaussian noise
    double ramp = 0.0;             ///< linear drift of the base load over the span
    double diurnal_amplitude = 0.0;  ///< relative daily swing (cooling load), peak at diurnal_peak_hour
    int diurnal_peak_hour = 15;      ///< local clock
    double underclock_depth = 0.0;
    int underclock_hours = 0;
    double underclock_probability = 0.0;  ///< per day
    std::uint64_t seed = 0;

    void validate() const {
        if (!(curtail_depth >= 0.0 && curtail_depth <= 1.0)) throw InputError(facility_id + ": curtail_depth must be in [0, 1]");
        if (!(noise >= 0.0)) throw InputError(facility_id + ": noise must be >= 0");
        if (!(diurnal_amplitude >= 0.0 && diurnal_amplitude < 1.0)) throw InputError(facility_id + ": diurnal_amplitude must be in [0, 1)");
        if (!(base_load >= 0.0)) throw InputError(facility_id + ": base_load must be >= 0");
        if (!(window_probability >= 0.0 && window_probability <= 1.0) ||
            !(underclock_probability >= 0.0 && underclock_probability <= 1.0))
            throw InputError(facility_id + ": probabilities must be in [0, 1]");
        if (!(underclock_depth >= 0.0 && underclock_depth < 1.0)) throw InputError(facility_id + ": underclock_depth must be in [0, 1)");
        if (window_start_hour < 0 || window_start_hour > 23 || window_end_hour < 0 || window_end_hour > 24)
            throw InputError(facility_id + ": window hours out of range");
        if (!(schedule_jitter >= 0.0)) throw InputError(facility_id + ": schedule_jitter must be >= 0");
    }
};

struct GridSpec {
    std::string region_id;
    double lme_mean = 0.4;                 ///< tons CO2/MWh
    double diurnal_amplitude = 0.0;
    int diurnal_peak_hour = 18;            ///< UTC hour of the sinusoid peak
    double regime_switch_probability = 0.0;  ///< per hour
    double regime_step = 0.0;              ///< +/- offset of the two regimes
    double negative_hour_probability = 0.0;
    double negative_magnitude = 0.05;      ///< negative hours draw from U(-magnitude, 0)
    double noise = 0.0;                    ///< absolute sigma, tons CO2/MWh
    std::uint64_t seed = 0;

    void validate() const {
        for (double p : {regime_switch_probability, negative_hour_probability})
            if (!(p >= 0.0 && p <= 1.0)) throw InputError(region_id + ": probabilities must be in [0, 1]");
        if (!(noise >= 0.0)) throw InputError(region_id + ": noise must be >= 0");
    }
};

struct GroundTruth {
    std::vector<ScheduledEvent> events;  ///< maximal curtailed runs
    std::vector<bool> curtailed;         ///< per hour
    std::vector<double> baseline;        ///< counterfactual (uncurtailed, noise-free) load per hour
    std::vector<double> clean_load;      ///< load before noise
    double avoided = 0.0;                ///< tons CO2 against the realized load
};

struct GeneratedLme {
    LmeSeries series;
    double lmev = 0.0;
};

struct GeneratedFacility {
    EnergySeries energy;
    GroundTruth truth;
};

/// splitmix64 finalizer; used to derive independent RNG streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t seed_for(std::uint64_t fleet_seed, const std::string& key) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : key) h = (h ^ c) * 0x100000001b3ull;
    return mix_seed(fleet_seed ^ h);
}

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
    return std::mt19937_64{mix_seed(seed ^ mix_seed(purpose))};
}

/// Diurnal sinusoid + two-regime Markov steps + Gaussian noise + occasional negative hours.
inline GeneratedLme gen_lme(const GridSpec& grid, const HourSpan& span) {
    grid.validate();
    if (span.size() < 48) throw InputError("gen_lme: span must be at least 48 hours");
    auto rng = stream(grid.seed, 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    GeneratedLme out;
    out.series.region_id = grid.region_id;
    out.series.start = span.begin;
    out.series.values.reserve(span.size());
    int regime = 1;
    std::vector<double> realized;
    realized.reserve(span.size());
    for (std::size_t i = 0; i < span.size(); ++i) {
        const auto cal = LocalCalendar::of(span.begin + hours(static_cast<long>(i)), {});
        const double phase = 2.0 * std::numbers::pi * (cal.hour - grid.diurnal_peak_hour) / 24.0;
        if (grid.regime_switch_probability > 0.0 && unit(rng) < grid.regime_switch_probability) regime = -regime;
        double v = grid.lme_mean + grid.diurnal_amplitude * std::cos(phase) + regime * grid.regime_step;
        if (grid.noise > 0.0) v += grid.noise * gauss(rng);
        if (grid.negative_hour_probability > 0.0 && unit(rng) < grid.negative_hour_probability)
            v = -grid.negative_magnitude * unit(rng);
        out.series.values.emplace_back(v);
        realized.push_back(v);
    }
    out.lmev = stats::sample_sd(realized).value_or(0.0);
    return out;
}

namespace detail {

inline void mark(std::vector<bool>& mask, std::int64_t start, std::int64_t len) {
    for (std::int64_t h = std::max<std::int64_t>(0, start); h < start + len && h < static_cast<std::int64_t>(mask.size()); ++h)
        mask[static_cast<std::size_t>(h)] = true;
}

inline std::vector<ScheduledEvent> runs(const std::vector<bool>& mask) {
    std::vector<ScheduledEvent> out;
    for (std::size_t i = 0; i < mask.size();) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < mask.size() && mask[j]) ++j;
        out.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(j - i)});
        i = j;
    }
    return out;
}

}  // namespace detail

/// Σ over curtailed hours of (true baseline - realized load) x LME.
inline double ground_truth_avoided(const GroundTruth& truth, const EnergySeries& energy, const LmeSeries& lme) {
    const auto off = hours_between(lme.start, energy.start);
    double sum = 0.0;
    for (std::size_t i = 0; i < energy.values.size(); ++i) {
        if (!truth.curtailed[i] || !energy.values[i]) continue;
        const auto j = off + static_cast<std::int64_t>(i);
        if (j < 0 || j >= static_cast<std::int64_t>(lme.values.size()) || !lme.values[static_cast<std::size_t>(j)]) continue;
        sum += (truth.baseline[i] - *energy.values[i]) * *lme.values[static_cast<std::size_t>(j)];
    }
    return sum;
}

/// Load = base x (1 + ramp drift) x (1 - depth while curtailed) x (1 + noise), clipped at 0.
/// The facility covers the LME series' span.
inline GeneratedFacility gen_facility(const FacilitySpec& spec, const LmeSeries& lme) {
    spec.validate();
    const auto n = lme.values.size();
    if (n == 0) throw InputError("gen_facility: empty LME series");
    GeneratedFacility out;
    auto& truth = out.truth;
    truth.curtailed.assign(n, false);

    auto sched_rng = stream(spec.seed, 2);
    auto uc_rng = stream(spec.seed, 3);
    auto noise_rng = stream(spec.seed, 4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Local-day starts (hour offsets, possibly negative for the partial first day).
    std::vector<std::int64_t> day_starts;
    for (std::size_t i = 0; i < n; ++i) {
        const auto cal = LocalCalendar::of(lme.start + hours(static_cast<long>(i)), spec.zone);
        if (i == 0 || cal.hour == 0) day_starts.push_back(static_cast<std::int64_t>(i) - cal.hour);
    }

    const auto scheduled = spec.curtail_depth > 0.0 ? spec.schedule : ScheduleKind::none;
    switch (scheduled) {
        case ScheduleKind::none: break;
        case ScheduleKind::daily: {
            int len = spec.window_end_hour - spec.window_start_hour;
            if (len <= 0) len += 24;
            for (auto d : day_starts) {
                const bool runs_today = unit(sched_rng) < spec.window_probability;
                const double shift = spec.schedule_jitter > 0.0 ? std::round(spec.schedule_jitter * gauss(sched_rng)) : 0.0;
                if (runs_today) detail::mark(truth.curtailed, d + spec.window_start_hour + static_cast<std::int64_t>(shift), len);
            }
            break;
        }
        case ScheduleKind::lme_threshold: {
            std::vector<double> vals;
            for (const auto& v : lme.values)
                if (v) vals.push_back(*v);
            const double cut = stats::percentile(vals, spec.lme_percentile);
            for (std::size_t i = 0; i < n; ++i)
                if (lme.values[i] && *lme.values[i] > cut) truth.curtailed[i] = true;
            break;
        }
        case ScheduleKind::explicit_events:
            for (const auto& e : spec.events) detail::mark(truth.curtailed, e.start, e.hours);
            break;
    }

    std::vector<bool> underclocked(n, false);
    if (spec.underclock_depth > 0.0 && spec.underclock_hours > 0) {
        std::uniform_int_distribution<int> start_hour(0, 23);
        for (auto d : day_starts) {
            const bool today = unit(uc_rng) < spec.underclock_probability;
            const int h = start_hour(uc_rng);
            if (today) detail::mark(underclocked, d + h, spec.underclock_hours);
        }
    }

    truth.events = detail::runs(truth.curtailed);
    truth.baseline.resize(n);
    truth.clean_load.resize(n);
    out.energy.facility_id = spec.facility_id;
    out.energy.start = lme.start;
    out.energy.values.resize(n);
    out.energy.partial.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const double drift = n > 1 ? 1.0 + spec.ramp * static_cast<double>(i) / static_cast<double>(n - 1) : 1.0;
        double level = spec.base_load * drift;
        if (spec.diurnal_amplitude != 0.0) {
            const int h = LocalCalendar::of(lme.start + hours(static_cast<long>(i)), spec.zone).hour;
            level *= 1.0 + spec.diurnal_amplitude * std::cos(2.0 * std::numbers::pi * (h - spec.diurnal_peak_hour) / 24.0);
        }
        if (underclocked[i] && !truth.curtailed[i]) level *= 1.0 - spec.underclock_depth;
        truth.baseline[i] = level;
        truth.clean_load[i] = truth.curtailed[i] ? level * (1.0 - spec.curtail_depth) : level;
        const double eps = spec.noise > 0.0 ? spec.noise * gauss(noise_rng) : 0.0;
        out.energy.values[i] = std::max(0.0, truth.clean_load[i] * (1.0 + eps));
    }
    truth.avoided = ground_truth_avoided(truth, out.energy, lme);
    return out;
}

inline double ground_truth_avoided(const FacilitySpec& spec, const LmeSeries& lme) {
    return gen_facility(spec, lme).truth.avoided;
}

struct FleetSpec {
    Instant start{};
    std::size_t hours = 2208;
    Resolution resolution = Resolution::hourly;
    std::uint64_t seed = 0;
    std::vector<GridSpec> grids;
    std::vector<FacilitySpec> facilities;

    HourSpan span() const { return {start, start + flexlens::hours(static_cast<long>(hours))}; }
};

/// Grid presets: a steady gas-dominated stack and a volatile one that cycles between fuels.
inline GridSpec steady_grid(std::string region, std::uint64_t seed) {
    GridSpec g;
    g.region_id = std::move(region);
    g.lme_mean = 0.42;
    g.diurnal_amplitude = 0.12;
    g.regime_switch_probability = 0.01;
    g.regime_step = 0.05;
    g.noise = 0.04;
    g.seed = seed;
    return g;
}

inline GridSpec volatile_grid(std::string region, std::uint64_t seed) {
    GridSpec g;
    g.region_id = std::move(region);
    g.lme_mean = 0.45;
    g.diurnal_amplitude = 0.18;
    g.regime_switch_probability = 0.03;
    g.regime_step = 0.16;
    g.negative_hour_probability = 0.01;
    g.noise = 0.08;
    g.seed = seed;
    return g;
}

/// Facility archetypes: steady large load with one shallow event, deep irregular curtailer,
/// deep daily-scheduled curtailer (2pm-9pm). All carry a small diurnal cooling swing.
inline FacilitySpec steady_archetype(std::string id, std::string region, std::uint64_t seed) {
    FacilitySpec f;
    f.facility_id = std::move(id);
    f.region = std::move(region);
    f.base_load = 125.0;
    f.curtail_depth = 0.3;
    f.schedule = ScheduleKind::explicit_events;
    f.events = {{1500, 19}};
    f.noise = 0.001;
    f.diurnal_amplitude = 0.03;
    f.seed = seed;
    return f;
}

inline FacilitySpec deep_irregular_archetype(std::string id, std::string region, std::uint64_t seed) {
    FacilitySpec f;
    f.facility_id = std::move(id);
    f.region = std::move(region);
    f.base_load = 125.0;
    f.curtail_depth = 0.99;
    f.schedule = ScheduleKind::daily;
    f.window_start_hour = 13;
    f.window_end_hour = 23;
    f.window_probability = 0.8;
    f.schedule_jitter = 4.0;
    f.noise = 0.001;
    f.diurnal_amplitude = 0.04;
    f.seed = seed;
    return f;
}

inline FacilitySpec deep_scheduled_archetype(std::string id, std::string region, std::uint64_t seed) {
    FacilitySpec f;
    f.facility_id = std::move(id);
    f.region = std::move(region);
    f.base_load = 5.9;
    f.curtail_depth = 0.995;
    f.schedule = ScheduleKind::daily;
    f.window_start_hour = 14;
    f.window_end_hour = 21;
    f.noise = 0.001;
    f.diurnal_amplitude = 0.05;
    f.diurnal_peak_hour = 4;
    f.seed = seed;
    return f;
}

/// Randomized fleet in the spirit of the three archetypes: depth >= 0.5, the given noise range,
/// 2-6% diurnal swing, mixed grids. Used by `synth --preset` and the validation suites.
inline FleetSpec random_fleet(std::size_t count, std::uint64_t seed, double noise_lo = 0.0, double noise_hi = 0.02,
                              Instant start = parse_timestamp("2023-07-01T00:00Z"), std::size_t span_hours = 2208) {
    FleetSpec fleet;
    fleet.start = start;
    fleet.hours = span_hours;
    fleet.seed = seed;
    auto rng = stream(seed, 99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t regions = std::max<std::size_t>(1, std::min<std::size_t>(7, count / 3));
    for (std::size_t r = 0; r < regions; ++r) {
        const auto name = "R" + std::to_string(r + 1);
        fleet.grids.push_back(r % 2 == 0 ? steady_grid(name, seed_for(seed, name)) : volatile_grid(name, seed_for(seed, name)));
    }
    for (std::size_t i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "F%02zu", i + 1);
        FacilitySpec f;
        f.facility_id = id;
        f.region = fleet.grids[i % regions].region_id;
        f.base_load = 3.0 + 125.0 * unit(rng);
        f.curtail_depth = 0.5 + 0.5 * unit(rng);
        f.schedule = unit(rng) < 0.8 ? ScheduleKind::daily : ScheduleKind::lme_threshold;
        f.window_start_hour = static_cast<int>(24.0 * unit(rng)) % 24;
        f.window_end_hour = (f.window_start_hour + 2 + static_cast<int>(8.0 * unit(rng))) % 24;
        f.window_probability = 0.3 + 0.7 * unit(rng);
        f.schedule_jitter = 3.0 * unit(rng);
        f.lme_percentile = 0.75 + 0.2 * unit(rng);
        f.noise = noise_lo + (noise_hi - noise_lo) * unit(rng);
        f.diurnal_amplitude = 0.02 + 0.04 * unit(rng);
        f.diurnal_peak_hour = static_cast<int>(24.0 * unit(rng)) % 24;
        f.ramp = 0.05 * (unit(rng) - 0.5);
        f.seed = seed_for(seed, f.facility_id);
        fleet.facilities.push_back(f);
    }
    return fleet;
}

}  // namespace flexlens::synth

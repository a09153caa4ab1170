#pragma once

// Fleet orchestration: ingest -> repair -> detect -> emissions -> metrics per facility (parallel),
// then regression and quadrants over the fleet, then artifact files.

#include "flexlens/analysis.hpp"
#include "flexlens/detect.hpp"
#include "flexlens/emissions.hpp"
#include "flexlens/error.hpp"
#include "flexlens/ingest.hpp"
#include "flexlens/io.hpp"
#include "flexlens/metrics.hpp"
#include "flexlens/synthgen.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace flexlens {

struct RunConfig {
    fs::path manifest;
    WindowSpec window;
    ThresholdMode threshold;
    QuadrantMode quadrant = QuadrantMode::mean;
    fs::path out;
    unsigned jobs = 1;
    std::uint64_t seed = 0;
    std::vector<double> grid = default_grid();
};

struct IngestStats {
    Resolution origin_resolution = Resolution::hourly;
    std::size_t partial_hours = 0;
    std::size_t capacity_nulled = 0;
    std::size_t outliers_repaired = 0;
    std::size_t lme_gaps = 0;
};

struct FacilityResult {
    FacilityEntry entry;
    IngestStats ingest;
    FacilityFrame frame;
    ThresholdProfile profile;
    DrFlags flags;
    std::vector<CurtailmentEvent> events;
    BaselineProfile baselines;
    EmissionTotals totals;
    FacilityMetrics metrics;
};

struct RegressionReport {
    std::optional<RegressionFit> baseline;
    std::optional<StepwiseResult> stepwise;
    std::vector<std::string> notices;
};

struct FleetReport {
    RunConfig config;
    HourSpan window;
    std::vector<FacilityResult> facilities;  ///< sorted by facility_id
    std::optional<ThresholdProfile> fleet_profile;
    RegressionReport regression;
    std::vector<QuadrantAssignment> quadrants;
    std::vector<std::string> notices;

    std::vector<FacilityMetrics> metrics() const {
        std::vector<FacilityMetrics> m;
        for (const auto& f : facilities) m.push_back(f.metrics);
        return m;
    }
};

/// Runs fn(0..n-1) on up to `jobs` threads. The lowest-index failure is rethrown, so errors
/// do not depend on scheduling.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    const auto workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace detail {

template <class Fn>
auto stage(const std::string& facility, const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const InvariantError& e) {
        throw InvariantError("facility '" + facility + "' [" + name + "]: " + e.what());
    } catch (const InputError& e) {
        throw InputError("facility '" + facility + "' [" + name + "]: " + e.what());
    }
}

struct LoadedSeries {
    EnergySeries energy;
    LmeSeries lme;
    std::size_t capacity_nulled = 0;
};

inline LoadedSeries load_series(const FacilityEntry& entry) {
    LoadedSeries out;
    out.energy = stage(entry.facility_id, "ingest", [&] {
        auto readings = parse_series(read_file(entry.energy_path), SeriesKind::energy, entry.zone);
        return resample_to_hourly(readings, entry.facility_id);
    });
    out.lme = stage(entry.facility_id, "ingest", [&] {
        auto readings = parse_series(read_file(entry.lme_path), SeriesKind::lme, entry.zone);
        return resample_lme(readings, entry.region);
    });
    if (entry.capacity_mw) out.capacity_nulled = apply_capacity(out.energy, *entry.capacity_mw);
    return out;
}

}  // namespace detail

/// Largest span common to every facility's energy and LME data.
inline HourSpan common_window(const std::vector<detail::LoadedSeries>& loaded) {
    if (loaded.empty()) throw InputError("no facilities");
    HourSpan w = intersect(loaded.front().energy.span(), loaded.front().lme.span());
    for (const auto& l : loaded) w = intersect(w, intersect(l.energy.span(), l.lme.span()));
    if (w.empty()) throw InputError("auto window: facilities share no common hours");
    return w;
}

inline RegressionReport run_regression(std::span<const FacilityMetrics> fleet, double alpha = kStepwiseAlpha) {
    RegressionReport rep;
    std::vector<double> y;
    NamedColumn uptime{"uptime", {}};
    for (const auto& m : fleet) {
        y.push_back(m.avoided);
        uptime.values.push_back(m.uptime_pct);
    }
    try {
        rep.baseline = ols_fit(std::vector<NamedColumn>{uptime}, y, "avoided");
    } catch (const InputError& e) {
        rep.notices.push_back(std::string("baseline regression skipped: ") + e.what());
        return rep;
    }
    std::vector<NamedColumn> candidates;
    auto add_candidate = [&](const std::string& name, auto getter) {
        NamedColumn c{name, {}};
        for (const auto& m : fleet) {
            const std::optional<double> v = getter(m);
            if (!v) {
                rep.notices.push_back("candidate '" + name + "' skipped: undefined for facility '" + m.facility_id + "'");
                return;
            }
            c.values.push_back(*v);
        }
        candidates.push_back(std::move(c));
    };
    add_candidate("cm", [](const FacilityMetrics& m) { return m.cm; });
    add_candidate("cr", [](const FacilityMetrics& m) { return m.cr; });
    add_candidate("me", [](const FacilityMetrics& m) { return std::optional<double>(m.me); });
    add_candidate("lmev", [](const FacilityMetrics& m) { return m.lmev; });
    try {
        rep.stepwise = stepwise_select({uptime}, candidates, y, alpha, "avoided");
    } catch (const InputError& e) {
        rep.notices.push_back(std::string("stepwise regression skipped: ") + e.what());
    }
    return rep;
}

inline json regression_json(const RegressionReport& rep) {
    json j;
    j["response"] = "avoided";
    j["baseline_fit"] = rep.baseline ? to_json(*rep.baseline) : json(nullptr);
    j["stepwise"] = rep.stepwise ? to_json(*rep.stepwise) : json(nullptr);
    j["notices"] = rep.notices;
    return j;
}

/// Executes every per-facility stage and the fleet aggregates; writes nothing.
inline FleetReport analyze_fleet(const RunConfig& config) {
    const auto manifest = Manifest::load(config.manifest);
    if (manifest.facilities.empty()) throw InputError("no facilities");
    validate_grid(config.grid);
    const auto& entries = manifest.facilities;
    const auto n = entries.size();

    std::vector<detail::LoadedSeries> loaded(n);
    parallel_for(n, config.jobs, [&](std::size_t i) { loaded[i] = detail::load_series(entries[i]); });

    FleetReport report;
    report.config = config;
    report.window = config.window.automatic ? common_window(loaded) : config.window.span;
    report.facilities.resize(n);

    parallel_for(n, config.jobs, [&](std::size_t i) {
        auto& res = report.facilities[i];
        const auto& entry = entries[i];
        res.entry = entry;
        auto& src = loaded[i];
        res.ingest.origin_resolution = src.energy.origin_resolution;
        res.ingest.capacity_nulled = src.capacity_nulled;
        detail::stage(entry.facility_id, "repair", [&] {
            auto energy = fill_gaps(src.energy, report.window);
            auto repaired = repair_outliers_report(energy, entry.zone);
            res.ingest.outliers_repaired = repaired.repaired.size();
            auto lme = fill_gaps(src.lme, report.window);
            res.frame = align(repaired.series, lme, entry.zone);
            res.ingest.lme_gaps = res.frame.lme_gaps;
            res.ingest.partial_hours = static_cast<std::size_t>(
                std::count_if(res.frame.rows.begin(), res.frame.rows.end(), [](const FrameRow& r) { return r.partial && r.energy; }));
            if (res.frame.valid_hours() == 0) throw InputError("no valid hours in window " + WindowSpec{false, report.window}.str());
            return 0;
        });
        res.profile = detail::stage(entry.facility_id, "detect", [&] {
            return config.threshold.kind == ThresholdMode::Kind::fixed
                       ? fixed_threshold(res.frame, config.grid, config.threshold.value)
                       : knee_threshold(res.frame, config.grid);
        });
    });

    if (config.threshold.kind == ThresholdMode::Kind::kneedle_fleet) {
        std::vector<ThresholdProfile> profiles;
        for (const auto& f : report.facilities) profiles.push_back(f.profile);
        report.fleet_profile = fleet_knee_threshold(profiles);
        for (auto& f : report.facilities) {
            f.profile.chosen_threshold = report.fleet_profile->chosen_threshold;
            f.profile.fallback = report.fleet_profile->fallback;
            f.profile.warning = report.fleet_profile->warning;
        }
    }

    parallel_for(n, config.jobs, [&](std::size_t i) {
        auto& res = report.facilities[i];
        const auto& id = res.entry.facility_id;
        detail::stage(id, "detect", [&] {
            res.flags = flag_hours(res.frame, res.profile.chosen_threshold);
            res.events = extract_events(res.frame, res.flags);
            std::size_t in_events = 0;
            for (const auto& e : res.events) in_events += static_cast<std::size_t>(e.duration_hours);
            require_invariant(in_events == res.flags.flagged_hours, "flagged hours equal total event duration");
            return 0;
        });
        detail::stage(id, "emissions", [&] {
            res.baselines = daily_baselines(res.frame, res.flags);
            res.totals = compute_emissions(res.frame, res.flags, res.baselines);
            return 0;
        });
        res.metrics = detail::stage(id, "metrics", [&] { return compute_metrics(res.frame, res.flags, res.events, res.totals); });
        require_invariant(res.metrics.uptime_pct >= 0.0 && res.metrics.uptime_pct <= 100.0, "uptime within [0, 100]");
    });

    for (const auto& f : report.facilities)
        if (!f.profile.warning.empty()) spdlog::warn("{}: {}", f.entry.facility_id, f.profile.warning);

    const auto metrics = report.metrics();
    if (metrics.size() < 2) {
        report.regression.notices.push_back("regression skipped: n too small (" + std::to_string(metrics.size()) + " facility)");
        report.notices.push_back("quadrant classification skipped: needs at least 2 facilities");
    } else {
        report.regression = run_regression(metrics);
        report.quadrants = quadrant_classify(metrics, config.quadrant);
    }
    for (const auto& note : report.regression.notices) spdlog::info("{}", note);
    return report;
}

inline json summary_json(const FleetReport& report) {
    json j;
    j["config"] = {{"window", report.config.window.str()},
                   {"window_span", WindowSpec{false, report.window}.str()},
                   {"threshold_mode", report.config.threshold.str()},
                   {"quadrant_mode", to_string(report.config.quadrant)},
                   {"seed", report.config.seed}};
    j["facilities"] = json::array();
    for (const auto& f : report.facilities) {
        std::size_t fallback_days = 0;
        for (auto s : f.baselines.source) fallback_days += s == BaselineSource::daily_max_fallback;
        const auto& m = f.metrics;
        auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        j["facilities"].push_back({
            {"facility_id", f.entry.facility_id},
            {"region", f.entry.region},
            {"timezone", f.entry.zone.str()},
            {"origin_resolution", to_string(f.ingest.origin_resolution)},
            {"partial_hours", f.ingest.partial_hours},
            {"capacity_nulled", f.ingest.capacity_nulled},
            {"outliers_repaired", f.ingest.outliers_repaired},
            {"lme_gaps", f.ingest.lme_gaps},
            {"rows", f.frame.rows.size()},
            {"valid_hours", f.flags.valid_hours},
            {"flagged_hours", f.flags.flagged_hours},
            {"excluded_days", f.flags.excluded_days()},
            {"baseline_fallback_days", fallback_days},
            {"threshold", f.profile.chosen_threshold},
            {"selection_mode", to_string(f.profile.selection_mode)},
            {"threshold_fallback", f.profile.fallback},
            {"events", f.events.size()},
            {"metrics",
             {{"uptime_pct", m.uptime_pct}, {"cm", opt(m.cm)}, {"cr", opt(m.cr)}, {"me", m.me}, {"nae", opt(m.nae)},
              {"er", opt(m.er)}, {"lmev", opt(m.lmev)}, {"avoided", m.avoided}, {"induced", m.induced},
              {"pearson_r", opt(m.pearson_r)}}},
        });
    }
    if (report.fleet_profile) j["fleet_threshold"] = report.fleet_profile->chosen_threshold;
    j["notices"] = report.notices;
    return j;
}

inline fs::path facility_dir(const fs::path& out, const std::string& id) { return out / "facilities" / id; }

/// Writes summary, metrics, per-facility CSVs, regression and quadrant outputs.
inline void write_artifacts(const FleetReport& report, const fs::path& out) {
    fs::create_directories(out);
    for (const auto& f : report.facilities) {
        const auto dir = facility_dir(out, f.entry.facility_id);
        std::optional<double> dr_at_chosen;
        if (f.flags.valid_hours > 0)
            dr_at_chosen = static_cast<double>(f.flags.flagged_hours) / static_cast<double>(f.flags.valid_hours);
        write_file(dir / "thresholds.csv", thresholds_csv(f.profile, dr_at_chosen));
        write_file(dir / "events.csv", events_csv(f.events));
        write_file(dir / "emissions.csv", emissions_csv(f.frame, f.flags, f.baselines, f.totals.avoided_by_hour));
    }
    const auto metrics = report.metrics();
    write_file(out / "metrics.csv", metrics_csv(metrics));
    write_file(out / "regression.json", regression_json(report.regression).dump(2) + "\n");
    if (!report.quadrants.empty()) write_file(out / "quadrants.csv", quadrants_csv(report.quadrants));
    write_file(out / "summary.json", summary_json(report).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Synthetic fleet output

/// Writes energy/<id>.csv, lme/<region>.csv, manifest.json and truth.json under `out`.
inline void write_synthetic_fleet(const synth::FleetSpec& fleet, const fs::path& out, unsigned jobs = 1) {
    const auto span = fleet.span();
    std::vector<synth::GeneratedLme> grids(fleet.grids.size());
    parallel_for(grids.size(), jobs, [&](std::size_t i) { grids[i] = synth::gen_lme(fleet.grids[i], span); });
    std::vector<synth::GeneratedFacility> facilities(fleet.facilities.size());
    parallel_for(facilities.size(), jobs, [&](std::size_t i) {
        const auto& spec = fleet.facilities[i];
        const auto g = std::find_if(fleet.grids.begin(), fleet.grids.end(),
                                    [&](const synth::GridSpec& s) { return s.region_id == spec.region; });
        if (g == fleet.grids.end()) throw InputError("unknown region '" + spec.region + "'");
        facilities[i] = synth::gen_facility(spec, grids[static_cast<std::size_t>(g - fleet.grids.begin())].series);
    });

    json manifest{{"facilities", json::array()}};
    json truth{{"grids", json::array()}, {"facilities", json::array()}};
    for (std::size_t i = 0; i < grids.size(); ++i) {
        const auto& g = grids[i];
        write_file(out / "lme" / (g.series.region_id + ".csv"), series_csv(g.series.start, g.series.values, Resolution::hourly));
        truth["grids"].push_back({{"region", g.series.region_id}, {"lmev", g.lmev}});
    }
    for (std::size_t i = 0; i < facilities.size(); ++i) {
        const auto& spec = fleet.facilities[i];
        const auto& gen = facilities[i];
        write_file(out / "energy" / (spec.facility_id + ".csv"),
                   series_csv(gen.energy.start, gen.energy.values, fleet.resolution));
        manifest["facilities"].push_back({{"facility_id", spec.facility_id},
                                          {"energy", "energy/" + spec.facility_id + ".csv"},
                                          {"lme", "lme/" + spec.region + ".csv"},
                                          {"region", spec.region},
                                          {"timezone", spec.zone.str()}});
        json events = json::array();
        for (const auto& e : gen.truth.events) {
            const auto s = gen.energy.start + hours(static_cast<long>(e.start));
            events.push_back({{"start", format_timestamp(s)}, {"end", format_timestamp(s + hours(static_cast<long>(e.hours)))}});
        }
        std::size_t curtailed = 0;
        for (bool c : gen.truth.curtailed) curtailed += c;
        truth["facilities"].push_back({{"facility_id", spec.facility_id},
                                       {"region", spec.region},
                                       {"seed", spec.seed},
                                       {"curtailed_hours", curtailed},
                                       {"avoided", gen.truth.avoided},
                                       {"events", events}});
    }
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
    write_file(out / "truth.json", truth.dump(2) + "\n");
}

}  // namespace flexlens

#pragma once

// Avoided emissions against each day's non-curtailed baseline, and induced emissions.

#include "flexlens/detect.hpp"
#include "flexlens/error.hpp"
#include "flexlens/ingest.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace flexlens {

/// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

enum class BaselineSource { unflagged_mean, daily_max_fallback, excluded_day };

inline const char* to_string(BaselineSource s) {
    switch (s) {
        case BaselineSource::unflagged_mean: return "mean-of-unflagged";
        case BaselineSource::daily_max_fallback: return "daily-max-fallback";
        case BaselineSource::excluded_day: return "excluded";
    }
    return "?";
}

struct DailyBaseline {
    double value = 0.0;  ///< MWh
    BaselineSource source = BaselineSource::unflagged_mean;
};

/// Per-day counterfactual level, indexed like DrFlags::days. Excluded days carry null.
struct BaselineProfile {
    std::vector<std::optional<double>> baseline;
    std::vector<BaselineSource> source;
};

/// Mean of the day's valid unflagged hours; the day's maximum when every valid hour is flagged.
inline DailyBaseline daily_baseline(const FacilityFrame& frame, const DrFlags& flags, std::size_t day) {
    const auto& d = flags.days.at(day);
    if (d.excluded()) throw InputError("daily_baseline: day has no valid hours");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = d.first_row; i < d.end_row; ++i) {
        if (!frame.rows[i].energy || flags.flag[i]) continue;
        sum += *frame.rows[i].energy;
        ++count;
    }
    if (count == 0) return {*d.max_energy, BaselineSource::daily_max_fallback};
    return {sum / static_cast<double>(count), BaselineSource::unflagged_mean};
}

inline BaselineProfile daily_baselines(const FacilityFrame& frame, const DrFlags& flags) {
    BaselineProfile p;
    p.baseline.reserve(flags.days.size());
    for (std::size_t d = 0; d < flags.days.size(); ++d) {
        if (flags.days[d].excluded()) {
            p.baseline.push_back(std::nullopt);
            p.source.push_back(BaselineSource::excluded_day);
            continue;
        }
        const auto b = daily_baseline(frame, flags, d);
        p.baseline.push_back(b.value);
        p.source.push_back(b.source);
    }
    return p;
}

/// (baseline - e) x LME for a flagged hour, zero otherwise. Negative results are kept.
inline double avoided_hour(double energy, double baseline, double lmef, bool flagged) {
    return flagged ? (baseline - energy) * lmef : 0.0;
}

struct EmissionTotals {
    double avoided = 0.0;                 ///< tons CO2
    double induced = 0.0;                 ///< tons CO2
    std::vector<double> avoided_by_hour;  ///< per frame row
};

inline double total_avoided(const FacilityFrame& frame, const DrFlags& flags, const BaselineProfile& baselines) {
    CompensatedSum sum;
    for (std::size_t i = 0; i < frame.rows.size(); ++i) {
        if (!flags.flag[i]) continue;
        const auto& r = frame.rows[i];
        sum.add(avoided_hour(*r.energy, *baselines.baseline[flags.day_of_row[i]], *r.lme, true));
    }
    return sum.value();
}

/// Sum of energy x LME over every valid hour, curtailed or not.
inline double induced_emissions(const FacilityFrame& frame) {
    CompensatedSum sum;
    for (const auto& r : frame.rows)
        if (r.energy) sum.add(*r.energy * *r.lme);
    return sum.value();
}

inline EmissionTotals compute_emissions(const FacilityFrame& frame, const DrFlags& flags,
                                        const BaselineProfile& baselines) {
    EmissionTotals t;
    t.avoided_by_hour.assign(frame.rows.size(), 0.0);
    CompensatedSum sum;
    for (std::size_t i = 0; i < frame.rows.size(); ++i) {
        if (!flags.flag[i]) continue;
        const auto& r = frame.rows[i];
        t.avoided_by_hour[i] = avoided_hour(*r.energy, *baselines.baseline[flags.day_of_row[i]], *r.lme, true);
        sum.add(t.avoided_by_hour[i]);
    }
    t.avoided = sum.value();
    t.induced = induced_emissions(frame);
    return t;
}

}  // namespace flexlens

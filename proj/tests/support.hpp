#pragma once

#include "flexlens/detect.hpp"
#include "flexlens/emissions.hpp"
#include "flexlens/ingest.hpp"

#include <optional>
#include <string>
#include <vector>

namespace testing_support {

using flexlens::Instant;
using opt = std::optional<double>;

inline Instant t0() { return flexlens::parse_timestamp("2023-07-01T00:00Z"); }

inline flexlens::EnergySeries energy_series(std::vector<opt> values, Instant start = t0(), std::string id = "F") {
    flexlens::EnergySeries s;
    s.facility_id = std::move(id);
    s.start = start;
    s.values = std::move(values);
    s.partial.assign(s.values.size(), false);
    return s;
}

inline flexlens::LmeSeries lme_series(std::vector<opt> values, Instant start = t0(), std::string id = "R") {
    return {std::move(id), start, std::move(values)};
}

inline flexlens::FacilityFrame frame_of(std::vector<opt> energy, std::vector<opt> lme, Instant start = t0(),
                                        flexlens::UtcOffset zone = {}) {
    return flexlens::align(energy_series(std::move(energy), start), lme_series(std::move(lme), start), zone);
}

inline flexlens::FacilityFrame frame_of(std::vector<opt> energy, double lme = 0.5, Instant start = t0()) {
    std::vector<opt> l(energy.size(), lme);
    return frame_of(std::move(energy), std::move(l), start);
}

}  // namespace testing_support

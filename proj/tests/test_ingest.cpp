#include "support.hpp"

#include "flexlens/ingest.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace flexlens;
using namespace testing_support;

TEST(ParseSeries, SingleRow) {
    const auto r = parse_series("timestamp,value\n2023-07-01T00:00Z,12.5\n", SeriesKind::energy);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].timestamp, t0());
    EXPECT_DOUBLE_EQ(*r[0].value, 12.5);
}

TEST(ParseSeries, EmptyFileHasNoReadings) {
    try {
        parse_series("", SeriesKind::energy);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("no readings"), std::string::npos);
    }
    EXPECT_THROW(parse_series("timestamp,value\n", SeriesKind::energy), InputError);
}

TEST(ParseSeries, DuplicateTimestamp) {
    try {
        parse_series("timestamp,value\n2023-07-01T00:00Z,1\n2023-07-01T00:00Z,2\n", SeriesKind::energy);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    }
}

TEST(ParseSeries, NullCellsBomAndOffsets) {
    const auto r = parse_series("\xEF\xBB\xBFtimestamp,value\n2023-07-01T02:00+02:00,\n2023-07-01T01:00Z,null\n",
                                SeriesKind::energy);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].timestamp, t0());  // sorted, offset applied
    EXPECT_FALSE(r[0].value);
    EXPECT_FALSE(r[1].value);
}

TEST(ParseSeries, NegativeEnergyRejectedButNegativeLmeKept) {
    EXPECT_THROW(parse_series("timestamp,value\n2023-07-01T00:00Z,-1\n", SeriesKind::energy), InputError);
    const auto r = parse_series("timestamp,value\n2023-07-01T00:00Z,-0.05\n", SeriesKind::lme);
    EXPECT_DOUBLE_EQ(*r[0].value, -0.05);
}

TEST(ParseSeries, AssumedZoneForNaiveTimestamps) {
    const auto r = parse_series("timestamp,value\n2023-07-01 00:00,1\n", SeriesKind::energy, UtcOffset::parse("-05:00"));
    EXPECT_EQ(format_timestamp(r[0].timestamp), "2023-07-01T05:00Z");
}

namespace {
std::vector<RawReading> quarter_hours(std::vector<std::optional<double>> v, Instant start = t0()) {
    std::vector<RawReading> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back({start + minutes(15 * static_cast<long>(i)), v[i]});
    return out;
}
}  // namespace

TEST(Resample, ConstantQuarterHours) {
    const auto s = resample_to_hourly(quarter_hours({10, 10, 10, 10}));
    ASSERT_EQ(s.values.size(), 1u);
    EXPECT_DOUBLE_EQ(*s.values[0], 10.0);
    EXPECT_FALSE(s.partial[0]);
    EXPECT_EQ(s.origin_resolution, Resolution::quarter_hourly);
}

TEST(Resample, ArithmeticMean) { EXPECT_DOUBLE_EQ(*resample_to_hourly(quarter_hours({0, 0, 0, 4})).values[0], 1.0); }

TEST(Resample, PartialHourAveragesPresentReadings) {
    const auto s = resample_to_hourly(quarter_hours({8, std::nullopt, 12, std::nullopt}));
    EXPECT_DOUBLE_EQ(*s.values[0], 10.0);
    EXPECT_TRUE(s.partial[0]);
}

TEST(Resample, HourlyInputPassesThroughWithGaps) {
    const auto s = resample_to_hourly({{t0(), 5.0}, {t0() + hours(2), 7.0}});
    ASSERT_EQ(s.values.size(), 3u);
    EXPECT_FALSE(s.values[1]);
    EXPECT_EQ(s.origin_resolution, Resolution::hourly);
}

TEST(Resample, OffGridReadingRejected) {
    EXPECT_THROW(resample_to_hourly({{t0() + minutes(7), 1.0}, {t0() + minutes(15), 1.0}}), InputError);
}

TEST(ResampleProperty, DailyTotalsPreserved) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::optional<double>> v;
        double quarter_total = 0.0;
        for (int i = 0; i < 96; ++i) {
            v.push_back(u(rng));
            quarter_total += *v.back() * 0.25;
        }
        const auto s = resample_to_hourly(quarter_hours(v));
        double hourly_total = 0.0;
        for (const auto& h : s.values) hourly_total += *h;
        EXPECT_NEAR(hourly_total, quarter_total, 1e-9 * quarter_total);
    }
}

TEST(FillGaps, MissingMiddleHourBecomesNull) {
    auto s = energy_series({1.0, std::nullopt, 3.0});
    const auto f = fill_gaps(s, {t0(), t0() + hours(3)});
    ASSERT_EQ(f.values.size(), 3u);
    EXPECT_FALSE(f.values[1]);
    EXPECT_DOUBLE_EQ(*f.values[2], 3.0);
}

TEST(FillGaps, FullSpanUnchanged) {
    auto s = energy_series({1.0, 2.0, 3.0});
    EXPECT_EQ(fill_gaps(s, s.span()).values, s.values);
}

TEST(FillGaps, EmptySeriesGivesNulls) {
    auto s = energy_series({});
    const auto f = fill_gaps(s, {t0(), t0() + hours(24)});
    ASSERT_EQ(f.values.size(), 24u);
    for (const auto& v : f.values) EXPECT_FALSE(v);
}

TEST(FillGapsProperty, NeverChangesPresentValues) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::optional<double>> v;
        for (int i = 0; i < 50; ++i) v.push_back(u(rng) < 3.0 ? std::nullopt : std::optional<double>(u(rng)));
        const auto s = energy_series(v, t0() + hours(10));
        const auto f = fill_gaps(s, {t0(), t0() + hours(80)});
        for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(f.values[i + 10], v[i]);
    }
}

TEST(Capacity, ExceedancesNulled) {
    auto s = energy_series({5.0, 11.0, 10.0});
    EXPECT_EQ(apply_capacity(s, 10.0), 1u);
    EXPECT_FALSE(s.values[1]);
    EXPECT_DOUBLE_EQ(*s.values[2], 10.0);
}

namespace {
std::vector<std::optional<double>> two_days(double day1, std::vector<std::optional<double>> day2) {
    std::vector<std::optional<double>> v(24, day1);
    v.insert(v.end(), day2.begin(), day2.end());
    return v;
}
}  // namespace

TEST(RepairOutliers, ReplacedByNearestValidNeighbour) {
    std::vector<std::optional<double>> d2(24, 90.0);
    d2[5] = 180.0;
    d2[4] = 95.0;
    d2[6] = 99.0;
    const auto r = repair_outliers_report(energy_series(two_days(100.0, d2)));
    ASSERT_EQ(r.repaired.size(), 1u);
    EXPECT_DOUBLE_EQ(*r.series.values[24 + 5], 95.0);  // earlier neighbour wins the tie
}

TEST(RepairOutliers, BelowLimitUnchanged) {
    std::vector<std::optional<double>> d2(24, 150.0);
    const auto s = energy_series(two_days(100.0, d2));
    EXPECT_EQ(repair_outliers(s).values, s.values);
}

TEST(RepairOutliers, FirstDayExempt) {
    std::vector<std::optional<double>> v(24, 10.0);
    v[3] = 1e6;
    const auto s = energy_series(v);
    EXPECT_EQ(repair_outliers(s).values, s.values);
}

TEST(RepairOutliers, ReferenceSkipsFullyNullDays) {
    std::vector<std::optional<double>> v(24, 100.0);
    v.insert(v.end(), 24, std::nullopt);
    v.insert(v.end(), 24, 100.0);
    v[48 + 2] = 200.0;
    const auto r = repair_outliers_report(energy_series(v));
    ASSERT_EQ(r.repaired.size(), 1u);
    EXPECT_DOUBLE_EQ(*r.series.values[50], 100.0);
}

TEST(RepairOutliers, LocalDaysFollowZone) {
    // At UTC-05:00 the first local day holds only 5 hours, so a spike at UTC 10:00 has a reference.
    std::vector<std::optional<double>> v(48, 100.0);
    v[10] = 400.0;
    const auto utc = repair_outliers_report(energy_series(v));
    const auto est = repair_outliers_report(energy_series(v), UtcOffset::parse("-05:00"));
    EXPECT_TRUE(utc.repaired.empty());
    EXPECT_EQ(est.repaired.size(), 1u);
}

TEST(RepairOutliersProperty, Idempotent) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::optional<double>> v;
        for (int i = 0; i < 24 * 6; ++i) {
            const double r = u(rng);
            v.push_back(r < 0.05 ? std::nullopt : std::optional<double>(r < 0.1 ? 500.0 * u(rng) : 50.0 + 50.0 * u(rng)));
        }
        const auto once = repair_outliers(energy_series(v));
        EXPECT_EQ(repair_outliers(once).values, once.values) << "trial " << trial;
    }
}

TEST(Align, IntersectsSpans) {
    const auto jul1 = parse_timestamp("2023-07-01"), oct1 = parse_timestamp("2023-10-01");
    const auto jun1 = parse_timestamp("2023-06-01"), nov1 = parse_timestamp("2023-11-01");
    const auto e = energy_series(std::vector<std::optional<double>>(static_cast<std::size_t>(hours_between(jul1, oct1)), 1.0), jul1);
    const auto l = lme_series(std::vector<std::optional<double>>(static_cast<std::size_t>(hours_between(jun1, nov1)), 0.4), jun1);
    const auto f = align(e, l);
    EXPECT_EQ(f.rows.size(), 2208u);
    EXPECT_EQ(f.span(), (HourSpan{jul1, oct1}));
}

TEST(Align, DisjointSpansRejected) {
    EXPECT_THROW(align(energy_series({1.0}), lme_series({0.4}, t0() + hours(5))), InputError);
}

TEST(Align, MissingLmeNullsEnergy) {
    const auto f = frame_of({1.0, 2.0}, {0.4, std::nullopt});
    EXPECT_FALSE(f.rows[1].energy);
    EXPECT_EQ(f.lme_gaps, 1u);
}

TEST(AlignProperty, SpanCommutative) {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> off(0, 100), len(1, 100);
    for (int trial = 0; trial < 50; ++trial) {
        const HourSpan a{t0() + hours(off(rng)), t0() + hours(off(rng) + 100 + len(rng))};
        const HourSpan b{t0() + hours(off(rng)), t0() + hours(off(rng) + 100 + len(rng))};
        EXPECT_EQ(intersect(a, b), intersect(b, a));
    }
}

TEST(Time, CalendarUsesFacilityOffset) {
    const auto c = LocalCalendar::of(parse_timestamp("2023-07-01T03:00Z"), UtcOffset::parse("-05:00"));
    EXPECT_EQ(c.day, 30);
    EXPECT_EQ(c.hour, 22);
    EXPECT_EQ(c.month, 6);
    EXPECT_EQ(c.seconds_since_midnight, 22 * 3600);
}

TEST(Time, RoundTripFormat) {
    EXPECT_EQ(format_timestamp(parse_timestamp("2023-09-30T23:00Z")), "2023-09-30T23:00Z");
    EXPECT_THROW(parse_timestamp("2023-09-31"), InputError);
}

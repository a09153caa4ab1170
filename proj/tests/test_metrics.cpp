#include "support.hpp"

#include "flexlens/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace flexlens;
using namespace testing_support;

TEST(Uptime, Examples) {
    DrFlags f;
    f.valid_hours = 2208;
    EXPECT_DOUBLE_EQ(uptime_pct(f), 100.0);
    f.flagged_hours = 1104;
    EXPECT_DOUBLE_EQ(uptime_pct(f), 50.0);
    f.flagged_hours = 19;
    EXPECT_NEAR(uptime_pct(f), 99.14, 0.005);
    f.valid_hours = 0;
    EXPECT_THROW(uptime_pct(f), InputError);
}

TEST(CurtailmentMagnitude, LowestQuarter) {
    // unflagged mean 100; flagged {10, 20, 30, 40}: lowest ceil(4/4) = 1 -> {10}
    const auto fr = frame_of({100.0, 10.0, 20.0, 30.0, 40.0, 100.0});
    const auto f = flag_hours(fr, 0.9);
    EXPECT_DOUBLE_EQ(*curtailment_magnitude(fr, f), 90.0);
}

TEST(CurtailmentMagnitude, NearTotalShutdown) {
    const auto fr = frame_of({100.0, 0.01, 0.01, 100.0});
    EXPECT_NEAR(*curtailment_magnitude(fr, flag_hours(fr, 0.9)), 100.0, 0.02);
}

TEST(CurtailmentMagnitude, NullWithoutFlags) {
    const auto fr = frame_of({100.0, 100.0});
    EXPECT_FALSE(curtailment_magnitude(fr, flag_hours(fr, 0.9)));
}

TEST(CurtailmentMagnitude, QuartileCount) {
    EXPECT_EQ(lowest_quartile_count(1), 1u);
    EXPECT_EQ(lowest_quartile_count(4), 1u);
    EXPECT_EQ(lowest_quartile_count(5), 2u);
    EXPECT_EQ(lowest_quartile_count(19), 5u);
}

namespace {
CurtailmentEvent starting_at(std::int64_t seconds) {
    CurtailmentEvent e;
    e.start_seconds_of_day = seconds;
    return e;
}
}  // namespace

TEST(CurtailmentRegularity, Examples) {
    const std::vector<CurtailmentEvent> same{starting_at(50400), starting_at(50400), starting_at(50400)};
    EXPECT_DOUBLE_EQ(*curtailment_regularity(same), 0.0);
    const std::vector<CurtailmentEvent> two{starting_at(50400), starting_at(57600)};
    EXPECT_NEAR(*curtailment_regularity(two), 1.41421356, 1e-8);
    EXPECT_NEAR(*curtailment_regularity(two) * 3600.0, 5091.17, 0.01);
    EXPECT_FALSE(curtailment_regularity(std::vector<CurtailmentEvent>{starting_at(0)}));
}

TEST(MaxEnergy, Examples) {
    EXPECT_DOUBLE_EQ(max_energy(std::vector<opt>{5.0, 5.0}), 5.0);
    EXPECT_DOUBLE_EQ(max_energy(std::vector<opt>{3.0, 128.03, 7.0}), 128.03);
    EXPECT_DOUBLE_EQ(max_energy(std::vector<opt>{std::nullopt, 9.0, std::nullopt}), 9.0);
    EXPECT_THROW(max_energy(std::vector<opt>{std::nullopt}), InputError);
}

TEST(Ratios, PublishedTableRows) {
    EXPECT_NEAR(normalized_avoided(262.17, 128.03), 2.05, 0.005);
    EXPECT_NEAR(normalized_avoided(24433.34, 127.9), 191.03, 0.005);
    EXPECT_DOUBLE_EQ(normalized_avoided(0.0, 5.0), 0.0);
    EXPECT_NEAR(*emissions_ratio(262.17, 110471.36), 0.0024, 0.00005);
    EXPECT_NEAR(*emissions_ratio(1870.48, 5172.03), 0.36, 0.005);
    EXPECT_DOUBLE_EQ(*emissions_ratio(7.0, 7.0), 1.0);
    EXPECT_FALSE(emissions_ratio(1.0, 0.0));
    EXPECT_THROW(normalized_avoided(1.0, 0.0), InputError);
}

TEST(LmeVariability, Examples) {
    EXPECT_DOUBLE_EQ(*lme_variability(std::vector<double>{0.4, 0.4, 0.4}), 0.0);
    EXPECT_NEAR(*lme_variability(std::vector<double>{0.2, 0.4}), 0.141421356, 1e-8);
}

TEST(Pearson, Examples) {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 6};
    // direct formula: Sxy = 10, Sxx = 10, Syy = 14.8
    EXPECT_NEAR(*pearson_r(x, y), 10.0 / std::sqrt(10.0 * 14.8), 1e-12);
    EXPECT_DOUBLE_EQ(*pearson_r(x, x), 1.0);
    const std::vector<double> neg{-1, -2, -3, -4, -5};
    EXPECT_DOUBLE_EQ(*pearson_r(x, neg), -1.0);
    const std::vector<double> flat{1, 1, 1, 1, 1};
    EXPECT_FALSE(pearson_r(x, flat));
}

TEST(Pearson, FrameSkipsNullPairs) {
    const auto fr = frame_of({1.0, 2.0, std::nullopt, 3.0}, {0.1, 0.2, 0.9, 0.3});
    EXPECT_NEAR(*pearson_r(fr), 1.0, 1e-12);
}

TEST(ComputeMetrics, DefiningRatios) {
    std::vector<opt> e;
    std::vector<opt> l;
    for (int d = 0; d < 5; ++d)
        for (int h = 0; h < 24; ++h) {
            e.push_back(h >= 14 && h < 21 ? 2.0 : 100.0 + h % 3);
            l.push_back(0.3 + 0.01 * h);
        }
    const auto fr = frame_of(e, l);
    const auto f = flag_hours(fr, 0.9);
    const auto ev = extract_events(fr, f);
    const auto t = compute_emissions(fr, f, daily_baselines(fr, f));
    const auto m = compute_metrics(fr, f, ev, t);
    EXPECT_EQ(*m.nae, m.avoided / m.me);
    EXPECT_EQ(*m.er, m.avoided / m.induced);
    EXPECT_DOUBLE_EQ(*m.cr, 0.0);
    EXPECT_DOUBLE_EQ(m.uptime_pct + 100.0 * static_cast<double>(f.flagged_hours) / static_cast<double>(f.valid_hours), 100.0);
    for (const auto& r : fr.rows) EXPECT_GE(m.me, *r.energy);
}

TEST(MetricsProperty, PearsonSignOfAffineMap) {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(30), y(30);
        for (auto& v : x) v = g(rng);
        const double a = g(rng) * 10.0, b = g(rng);
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
        EXPECT_NEAR(*pearson_r(x, y), a > 0 ? 1.0 : -1.0, 1e-12);
    }
}

TEST(MetricsProperty, CrInvariantUnderDayShift) {
    std::mt19937_64 rng(53);
    std::uniform_int_distribution<int> start(0, 23), len(1, 4), gap(0, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<opt> v(24 * 20, 100.0);
        for (int d = 0; d < 10; ++d) {
            const int s = start(rng), n = len(rng);
            for (int h = s; h < std::min(24, s + n); ++h) v[static_cast<std::size_t>(d * 24 + h)] = 1.0;
        }
        std::vector<opt> shifted(24 * 20, 100.0);
        const std::size_t k = static_cast<std::size_t>(1 + gap(rng)) * 24;
        for (std::size_t i = 0; i + k < v.size(); ++i) shifted[i + k] = v[i];
        const auto a = frame_of(v), b = frame_of(shifted);
        const auto ea = extract_events(a, flag_hours(a, 0.9)), eb = extract_events(b, flag_hours(b, 0.9));
        ASSERT_EQ(ea.size(), eb.size());
        if (ea.size() >= 2) EXPECT_DOUBLE_EQ(*curtailment_regularity(ea), *curtailment_regularity(eb));
    }
}

TEST(MetricsProperty, CmScaleInvariant) {
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<opt> v, s;
        for (int i = 0; i < 96; ++i) {
            v.push_back(u(rng) < 0.2 ? 50.0 * u(rng) : 90.0 + 10.0 * u(rng));
            s.push_back(*v.back() * 8.0);
        }
        const auto a = frame_of(v), b = frame_of(s);
        const auto ca = curtailment_magnitude(a, flag_hours(a, 0.9)), cb = curtailment_magnitude(b, flag_hours(b, 0.9));
        ASSERT_EQ(ca.has_value(), cb.has_value());
        if (ca) EXPECT_NEAR(*ca, *cb, 1e-9);
    }
}

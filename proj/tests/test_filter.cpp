#include "spikesonar/filter.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace spikesonar;

namespace {

// Literal transcription of the pseudocode loop: a pass either sends the
// reference (when hits reached max_hits) or consumes one reading.
std::vector<double> reference_filter(const std::vector<double>& raw, unsigned max_hits, double max_error) {
    std::vector<double> out;
    unsigned hits = 0;
    double first = 0.0;
    std::size_t i = 0;
    while (true) {
        if (hits == max_hits) {
            out.push_back(first);
            hits = 0;
            continue;
        }
        if (i == raw.size()) break;
        const double m = raw[i++];
        if (hits == 0) {
            first = m;
            hits = 1;
        } else if (std::abs(m - first) <= max_error) {
            ++hits;
        } else {
            first = m;
            hits = 1;
        }
    }
    return out;
}

std::vector<double> run_filter(const std::vector<double>& raw, FilterConfig cfg) {
    MeasurementFilter f(cfg);
    std::vector<double> out;
    for (double m : raw) {
        if (auto e = f.push(m)) out.push_back(*e);
    }
    return out;
}

} // namespace

TEST(Filter, AgreeingReadingsEmitTheReference) {
    EXPECT_EQ(run_filter({1000, 1010, 990, 1005}, {4, 120}), (std::vector<double>{1000}));
}

TEST(Filter, EmitsBeforeConsumingTheNextReading) {
    MeasurementFilter f({4, 120});
    const std::vector<double> raw{1000, 1010, 995, 1000, 1003};
    std::vector<std::optional<double>> out;
    for (double m : raw) out.push_back(f.push(m));
    EXPECT_FALSE(out[2]);
    ASSERT_TRUE(out[3]);
    EXPECT_EQ(*out[3], 1000.0);
    EXPECT_FALSE(out[4]);
    EXPECT_EQ(f.state().hits, 1u);
}

TEST(Filter, IdenticalReadingsEmit) {
    for (double x : {0.0, 588.0, 5883.0}) EXPECT_EQ(run_filter({x, x, x, x}, {4, 120}), (std::vector<double>{x}));
}

TEST(Filter, OutlierBecomesTheNewReference) {
    EXPECT_EQ(run_filter({1000, 2000, 2010, 2005, 1995}, {4, 120}), (std::vector<double>{2000}));
    EXPECT_TRUE(run_filter({1000, 1010, 2000, 1005}, {4, 120}).empty());
}

TEST(Filter, ErrorBoundIsInclusive) {
    EXPECT_EQ(run_filter({1000, 1120, 880, 1000}, {4, 120}), (std::vector<double>{1000}));
    EXPECT_TRUE(run_filter({1000, 1121, 1000, 1000}, {4, 120}).empty());
}

TEST(Filter, StateAfterEmitIsReset) {
    FilterState s;
    const FilterConfig cfg{2, 10};
    auto r = ingest(s, cfg, 500);
    EXPECT_EQ(r.state.hits, 1u);
    EXPECT_FALSE(r.emitted);
    r = ingest(r.state, cfg, 505);
    ASSERT_TRUE(r.emitted);
    EXPECT_EQ(*r.emitted, 500.0);
    EXPECT_EQ(r.state.hits, 0u);
}

TEST(Filter, MaxHitsOneIsPassThrough) {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> v(0, 6000);
    std::vector<double> raw(500);
    for (auto& x : raw) x = v(rng);
    EXPECT_EQ(run_filter(raw, {1, 120}), raw);
}

TEST(Filter, RejectsNegativeReading) {
    MeasurementFilter f;
    EXPECT_THROW(f.push(-1.0), std::invalid_argument);
}

TEST(Filter, RejectsBadConfig) {
    EXPECT_THROW(MeasurementFilter(FilterConfig{0, 120}), std::invalid_argument);
    EXPECT_THROW(MeasurementFilter(FilterConfig{4, -1}), std::invalid_argument);
}

TEST(FilterProperties, MatchesPseudocode) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> base(500, 5000);
    std::normal_distribution<double> jitter(0, 80);
    std::bernoulli_distribution outlier(0.1);
    for (int trial = 0; trial < 200; ++trial) {
        const unsigned hits = 1 + trial % 6;
        const double centre = base(rng);
        std::vector<double> raw(300);
        for (auto& x : raw) x = outlier(rng) ? base(rng) : centre + jitter(rng);
        ASSERT_EQ(run_filter(raw, {hits, 120}), reference_filter(raw, hits, 120)) << "trial " << trial;
    }
}

TEST(FilterProperties, SoundAndThroughput) {
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> centre_dist(500, 5000);
    for (int trial = 0; trial < 100; ++trial) {
        const unsigned max_hits = 1 + trial % 7;
        const double centre = centre_dist(rng);
        std::uniform_real_distribution<double> within(centre - 60, centre + 60);
        const std::size_t n = 50 + trial;
        std::vector<double> raw(n);
        for (auto& x : raw) x = within(rng);

        MeasurementFilter f({max_hits, 120});
        std::vector<double> window;
        std::size_t emitted = 0;
        for (double m : raw) {
            window.push_back(m);
            if (auto e = f.push(m)) {
                ++emitted;
                ASSERT_GE(window.size(), max_hits);
                // The emitted value and the max_hits readings ending here agree.
                for (std::size_t k = window.size() - max_hits; k < window.size(); ++k) {
                    ASSERT_LE(std::abs(window[k] - *e), 120.0);
                }
            }
        }
        ASSERT_EQ(emitted, n / max_hits);
    }
}

TEST(FilterProperties, AlternatingOutliersNeverEmit) {
    std::vector<double> raw;
    for (int i = 0; i < 200; ++i) raw.push_back(i % 2 ? 4000.0 : 1000.0);
    for (unsigned h = 2; h <= 6; ++h) EXPECT_TRUE(run_filter(raw, {h, 120}).empty());
}

TEST(FilterSeries, CarriesTimesAndCsv) {
    std::istringstream in("t_ms,tof_us\n0,1000\n20,1010\n40,990\n60,1005\n80,3000\n");
    const auto raw = read_readings_csv(in);
    const auto out = filter_series(raw, {4, 120});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].t_ms, 60.0);
    EXPECT_EQ(out[0].value_us, 1000.0);
    std::ostringstream buf;
    write_readings_csv(buf, out);
    EXPECT_EQ(buf.str(), "t_ms,tof_us\n60,1000\n");
}

#include "cns/stats.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <vector>

// Expected percentiles are frozen from the nearest-rank definition applied
// by hand: rank = ceil(q * n), 1-based index into the sorted sample.

TEST(Stats, MeanOfSmallVector) {
    auto s = cns::compute_stats(std::vector<double>{1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(s.mean, 2.0);
    EXPECT_DOUBLE_EQ(s.max, 3.0);
}

TEST(Stats, NearestRankOnOneToHundred) {
    std::vector<double> samples(100);
    std::iota(samples.begin(), samples.end(), 1.0);
    auto s = cns::compute_stats(samples);
    // ceil(0.95*100)=95 -> sorted[94]=95; ceil(0.99*100)=99 -> 99.
    EXPECT_DOUBLE_EQ(s.p95, 95.0);
    EXPECT_DOUBLE_EQ(s.p99, 99.0);
    EXPECT_DOUBLE_EQ(s.max, 100.0);
    EXPECT_DOUBLE_EQ(s.mean, 50.5);
}

TEST(Stats, SingleSampleDegenerateCase) {
    auto s = cns::compute_stats(std::vector<double>{7.0});
    EXPECT_DOUBLE_EQ(s.mean, 7.0);
    EXPECT_DOUBLE_EQ(s.p95, 7.0);
    EXPECT_DOUBLE_EQ(s.p99, 7.0);
    EXPECT_DOUBLE_EQ(s.max, 7.0);
    EXPECT_DOUBLE_EQ(s.stddev, 0.0);
}

TEST(Stats, PopulationStdDev) {
    // Hand-computed: mean 3, squared deviations {4,0,4}, population var 8/3.
    auto s = cns::compute_stats(std::vector<double>{1.0, 3.0, 5.0});
    EXPECT_NEAR(s.stddev, std::sqrt(8.0 / 3.0), 1e-12);
}

TEST(Stats, ZeroVarianceSamples) {
    auto s = cns::compute_stats(std::vector<double>{4.0, 4.0, 4.0, 4.0});
    EXPECT_DOUBLE_EQ(s.stddev, 0.0);
}

TEST(Stats, OrderingInvariants) {
    std::vector<double> samples = {12.0, 3.0, 44.0, 7.0, 3.0, 9.0, 21.0};
    auto s = cns::compute_stats(samples);
    EXPECT_LE(s.mean, s.max);
    EXPECT_LE(s.p95, s.p99);
    EXPECT_LE(s.p99, s.max);
}

TEST(Stats, UnsortedInputHandled) {
    auto s = cns::compute_stats(std::vector<double>{9.0, 1.0, 5.0});
    EXPECT_DOUBLE_EQ(s.mean, 5.0);
    EXPECT_DOUBLE_EQ(s.max, 9.0);
    EXPECT_DOUBLE_EQ(s.p95, 9.0); // ceil(0.95*3)=3 -> sorted[2]
}

TEST(Stats, EmptySamplesIsAnError) {
    EXPECT_THROW(cns::compute_stats(std::vector<double>{}), cns::EmptySamplesError);
}

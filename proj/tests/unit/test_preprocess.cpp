#include <cmath>

#include <gtest/gtest.h>

#include "sdtrack/errors.hpp"
#include "sdtrack/preprocess.hpp"
#include "sdtrack/rng.hpp"
#include "support/oracles.hpp"

using namespace sdt;

namespace {

Grid2D row(const std::vector<double>& v) {
    Grid2D g(static_cast<int>(v.size()), 1);
    g.values() = v;
    return g;
}

}  // namespace

TEST(ZScaleBounds, FivePixelHandExample) {
    const ZScaleBounds b = zscale_bounds(row({1, 2, 3, 4, 5}), {2.5});
    EXPECT_NEAR(b.z1, 3 - 2.5 * std::sqrt(2.0), 1e-9);
    EXPECT_NEAR(b.z2, 3 + 2.5 * std::sqrt(2.0), 1e-9);
}

TEST(ZScaleBounds, ZeroVariance) {
    const ZScaleBounds b = zscale_bounds(row({0, 0, 0, 0}));
    EXPECT_EQ(b.z1, 0.0);
    EXPECT_EQ(b.z2, 0.0);
    const ZScaleBounds single = zscale_bounds(row({10}), {7.0});
    EXPECT_EQ(single.z1, 10.0);
    EXPECT_EQ(single.z2, 10.0);
}

TEST(ZScaleBounds, EvenCountMedianAveragesMiddle) {
    const std::vector<double> v = {9, 1, 4, 6};
    const ZScaleBounds b = zscale_bounds(row(v), {1.0});
    EXPECT_NEAR(0.5 * (b.z1 + b.z2), oracle::median(v), 1e-12);
    EXPECT_NEAR(0.5 * (b.z2 - b.z1), oracle::population_std(v), 1e-12);
}

TEST(ZScaleBounds, RandomImagesMatchOracle) {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        Grid2D g(static_cast<int>(rng.uniform_int(1, 30)), static_cast<int>(rng.uniform_int(1, 30)));
        for (double& v : g.values()) v = rng.normal(1000, 50);
        const ZScaleBounds b = zscale_bounds(g, {2.5});
        const double m = oracle::median(g.values());
        const double s = oracle::population_std(g.values());
        EXPECT_NEAR(b.z1, m - 2.5 * s, 1e-9);
        EXPECT_NEAR(b.z2, m + 2.5 * s, 1e-9);
    }
}

TEST(ZScaleBounds, RejectsBadInput) {
    EXPECT_THROW(zscale_bounds(Grid2D()), ValidationError);
    EXPECT_THROW(zscale_bounds(row({1, 2}), {0.0}), ValidationError);
    EXPECT_THROW(zscale_bounds(row({1, NAN})), ValidationError);
}

TEST(ZScaleApply, EndpointsMidpointAndClamp) {
    const ZScaleBounds b{10, 20};
    EXPECT_DOUBLE_EQ(zscale_value(10, b), 0.0);
    EXPECT_DOUBLE_EQ(zscale_value(20, b), 255.0);
    EXPECT_DOUBLE_EQ(zscale_value(15, b), 127.5);
    EXPECT_DOUBLE_EQ(zscale_value(-100, b), 0.0);
    EXPECT_DOUBLE_EQ(zscale_value(1e9, b), 255.0);
    const Grid2D out = zscale_apply(row({5, 10, 15, 20, 25}), b);
    EXPECT_EQ(out.values(), (std::vector<double>{0, 0, 127.5, 255, 255}));
}

TEST(ZScaleApply, DegenerateRangeMapsToMidGrey) {
    const Grid2D out = zscale(row({4, 4, 4}));
    for (double v : out.values()) EXPECT_EQ(v, 127.0);
}

TEST(ZScaleApply, BoundedAndMonotone) {
    Rng rng(8);
    Grid2D g(64, 64);
    for (double& v : g.values()) v = rng.normal(0, 1) * rng.uniform(1, 1000);
    const ZScaleBounds b = zscale_bounds(g);
    const Grid2D out = zscale_apply(g, b);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_GE(out.values()[i], 0.0);
        EXPECT_LE(out.values()[i], 255.0);
        for (std::size_t j : {i / 2, (i * 7) % g.size()}) {
            if (g.values()[j] <= g.values()[i]) {
                EXPECT_LE(out.values()[j], out.values()[i]);
            }
        }
    }
}

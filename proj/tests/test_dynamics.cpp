#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "helpers.hpp"
#include "wristvat/dynamics.hpp"
#include "wristvat/oracle.hpp"

using namespace wristvat;
using testing_support::random_frame;

namespace {

std::vector<oracle::Point> points3(const Frame& f) {
    std::vector<oracle::Point> p;
    for (std::size_t i = 0; i < f.size(); ++i) p.push_back({f.x[i], f.y[i], f.z[i]});
    return p;
}

std::vector<oracle::Point> points2(const Frame& f, AxisPair pair) {
    const auto [a, b] = axes_of(pair);
    std::vector<oracle::Point> p;
    for (std::size_t i = 0; i < f.size(); ++i) p.push_back({f.view().axis(a)[i], f.view().axis(b)[i]});
    return p;
}

Frame sinusoid_frame(std::size_t n, double period_samples) {
    Frame f;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / period_samples);
        f.x.push_back(v);
        f.y.push_back(v);
        f.z.push_back(v);
    }
    return f;
}

}  // namespace

TEST(PathLength, SmallCases) {
    Frame c{std::vector<double>(10, 0.3), std::vector<double>(10, -0.1), std::vector<double>(10, 1.0)};
    EXPECT_EQ(path_length(c.view()), 0.0);
    Frame two{{0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}};
    EXPECT_DOUBLE_EQ(path_length(two.view()), 1.0);
    Frame one{{0.0}, {0.0}, {0.0}};
    EXPECT_THROW(path_length(one.view()), FrameTooShort);
}

TEST(PathLength, MatchesDirectLoop) {
    const auto f = random_frame(400, 21);
    double ref = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i)
        ref += std::hypot(f.x[i] - f.x[i - 1], f.y[i] - f.y[i - 1], f.z[i] - f.z[i - 1]);
    EXPECT_NEAR(path_length(f.view()), ref, 1e-12 * ref);
}

TEST(Mad3d, TwoPoints) {
    Frame f{{0.0, 3.0}, {0.0, 4.0}, {1.0, 1.0}};
    EXPECT_DOUBLE_EQ(mad_3d(f.view()), 5.0);
}

TEST(Mad3d, RandomFrameMatchesOracle) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto f = random_frame(400, 100 + s);
        const double ref = oracle::oracle_mad(points3(f), 4.0);
        EXPECT_NEAR(mad_3d(f.view()), ref, 1e-12 * ref);
    }
}

TEST(Mad3d, OutlierIsTrimmed) {
    auto f = random_frame(400, 31, 0.1);
    const double clean = oracle::oracle_mad(points3(f), 1e9);  // no trimming at all
    // Every clean point lies well inside 4 sigma once the outlier inflates sigma.
    f.x.push_back(50.0);
    f.y.push_back(50.0);
    f.z.push_back(50.0);
    EXPECT_NEAR(mad_3d(f.view()), clean, 1e-12);
}

TEST(MadPair, DiagonalIsRootTwoTimesOneDimensional) {
    // Values in {-1, 0, 1}: all within the 2-sigma diagonal radius, so nothing is trimmed.
    Frame f;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 300; ++i) {
        f.x.push_back(static_cast<double>(static_cast<int>(rng() % 3) - 1));
        f.y.push_back(0.0);
        f.z.push_back(0.0);
    }
    double m1 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t j = 0; j < f.size(); ++j) m1 += std::abs(f.x[i] - f.x[j]);
    m1 /= static_cast<double>(f.size() * (f.size() - 1));
    EXPECT_NEAR(mad_axis_pair(f.view(), AxisPair::xx), std::sqrt(2.0) * m1, 1e-12);
}

TEST(MadPair, AllPairsMatchOracle) {
    const auto f = random_frame(400, 55);
    for (auto p : kAxisPairs) {
        const double ref = oracle::oracle_mad(points2(f, p), 2.0);
        EXPECT_NEAR(mad_axis_pair(f.view(), p), ref, 1e-12 * ref) << to_string(p);
    }
}

TEST(MadPair, ConstantFrameIsZero) {
    Frame c{std::vector<double>(64, 0.5), std::vector<double>(64, 0.25), std::vector<double>(64, -1.0)};
    for (auto p : kAxisPairs) EXPECT_EQ(mad_axis_pair(c.view(), p), 0.0);
    EXPECT_EQ(mad_3d(c.view()), 0.0);
}

TEST(Tde, TraceAndNonNegativity) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto z = zscore_frame(random_frame(400, 900 + s).view());
        for (auto sp : kTdeSpacings) {
            const auto e = tde_eigenspectrum(z.view(), sp);
            ASSERT_EQ(e.size(), kTdeChannels);
            EXPECT_NEAR(std::accumulate(e.begin(), e.end(), 0.0), 21.0, 1e-9);
            EXPECT_TRUE(std::is_sorted(e.rbegin(), e.rend()));
            for (double v : e) EXPECT_GE(v, 0.0);
        }
    }
}

TEST(Tde, WhiteNoiseLongFrameNearIdentity) {
    // Sampling spread shrinks with length; at 20000 samples it is about 0.06.
    const auto z = zscore_frame(random_frame(20000, 12).view());
    for (auto sp : kTdeSpacings)
        for (double v : tde_eigenspectrum(z.view(), sp)) EXPECT_NEAR(v, 1.0, 0.15);
}

TEST(Tde, SinusoidIsRankTwo) {
    const auto z = zscore_frame(sinusoid_frame(400, 63.0).view());
    for (auto sp : kTdeSpacings) {
        const auto e = tde_eigenspectrum(z.view(), sp);
        EXPECT_GT(e[0] + e[1], 21.0 - 1e-6);
        for (std::size_t k = 2; k < e.size(); ++k) EXPECT_LT(e[k], 1e-6);
    }
}

TEST(Tde, TimeReversalInvariant) {
    auto f = random_frame(400, 77);
    for (std::size_t i = 1; i < f.size(); ++i) f.x[i] += 0.8 * f.x[i - 1];  // some memory
    auto r = f;
    std::reverse(r.x.begin(), r.x.end());
    std::reverse(r.y.begin(), r.y.end());
    std::reverse(r.z.begin(), r.z.end());
    const auto zf = zscore_frame(f.view());
    const auto zr = zscore_frame(r.view());
    for (auto sp : kTdeSpacings) {
        const auto a = tde_eigenspectrum(zf.view(), sp);
        const auto b = tde_eigenspectrum(zr.view(), sp);
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
    }
}

TEST(Tde, TooShortForScale) {
    const auto z = zscore_frame(random_frame(200, 3).view());
    EXPECT_THROW(tde_eigenspectrum(z.view(), 31), FrameTooShortForScale);
}

TEST(Dynamics, FeatureCountAndScaleInvariance) {
    EXPECT_EQ(DynamicsFeatures::kCount, 92u);
    const auto f = random_frame(400, 5);
    Frame g = f;
    for (auto* v : {&g.x, &g.y, &g.z})
        for (double& e : *v) e = 2.5 * e + 0.3;
    const auto a = dynamics_features(f.view()).flatten();
    const auto b = dynamics_features(g.view()).flatten();
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
}

TEST(RawIntensity, ConstantScalingAndOracles) {
    Frame c{std::vector<double>(40, 0.0), std::vector<double>(40, 0.0), std::vector<double>(40, 0.0)};
    const auto rc = raw_intensity(c.view());
    EXPECT_EQ(rc.msd_g, 0.0);
    EXPECT_EQ(rc.pl_raw, 0.0);
    EXPECT_EQ(rc.mad_raw, 0.0);

    const auto f = random_frame(400, 9, 0.2);
    Frame g = f;
    for (auto* v : {&g.x, &g.y, &g.z})
        for (double& e : *v) e *= 3.0;
    const auto a = raw_intensity(f.view());
    const auto b = raw_intensity(g.view());
    EXPECT_NEAR(b.msd_g, 3.0 * a.msd_g, 1e-12);
    EXPECT_NEAR(b.pl_raw, 3.0 * a.pl_raw, 1e-10);
    EXPECT_NEAR(b.mad_raw, 3.0 * a.mad_raw, 1e-12);

    const auto m = magnitude(f.view());
    double mean = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
    double ss = 0.0;
    for (double v : m) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(a.msd_g, std::sqrt(ss / static_cast<double>(m.size())), 1e-12);
    EXPECT_NEAR(a.mad_raw, oracle::oracle_mad(points3(f), 4.0), 1e-12);
}
